// config.hpp - modem numerology: sample rate, subcarrier layout, thresholds
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace uwm {

// All physical-layer constants. The waveform is an OFDM signal occupying
// 1-4 kHz; subcarrier spacing is configurable (50/25/10 Hz) and every
// derived quantity follows from it, so nothing else is hardcoded.
struct ModemConfig {
    double sample_rate = 48000.0;      // Hz
    double subcarrier_spacing = 50.0;  // Hz (50, 25 or 10 supported)
    double band_low_hz = 1000.0;       // first usable bin center
    double band_high_hz = 4000.0;      // exclusive upper band edge
    int cp_base = 67;                  // cyclic prefix at 50 Hz spacing (960-pt symbol)
    int eq_len = 480;                  // equalizer taps: channel delay-spread budget,
                                       // a physical property; does not scale with spacing
    double snr_threshold_db = 7.0;     // minimum usable per-bin SNR for band selection
    double realloc_lambda = 0.8;       // discount on the power-reallocation SNR boost

    int fft_size() const { return (int)std::lround(sample_rate / subcarrier_spacing); }
    int cp_len() const { return (int)std::lround(cp_base * (double)fft_size() / 960.0); }
    int symbol_len() const { return fft_size() + cp_len(); }
    int first_bin() const { return (int)std::lround(band_low_hz / subcarrier_spacing); }
    // Usable bin count: centers at band_low, band_low+spacing, ..., < band_high.
    // 60 at 50 Hz spacing (1000..3950 Hz), 120 at 25 Hz, 300 at 10 Hz.
    int num_bins() const { return (int)std::lround((band_high_hz - band_low_hz) / subcarrier_spacing); }
    double bin_center_hz(int band_index) const {
        return (first_bin() + band_index) * subcarrier_spacing;
    }
    double symbol_duration_s() const { return symbol_len() / sample_rate; }

    void validate() const {
        if (sample_rate <= 0 || subcarrier_spacing <= 0)
            throw std::invalid_argument("config: rates must be positive");
        if (std::fabs(fft_size() * subcarrier_spacing - sample_rate) > 1e-6)
            throw std::invalid_argument("config: fft_size * spacing must equal sample_rate");
        if (band_low_hz <= 0 || band_high_hz <= band_low_hz || band_high_hz > sample_rate / 2)
            throw std::invalid_argument("config: band edges outside (0, Nyquist)");
    }
};

// Load/save a ModemConfig as JSON with an explicit schema_version field.
ModemConfig load_modem_config(const std::string& path);
void save_modem_config(const ModemConfig& cfg, const std::string& path);

}  // namespace uwm
