// channel.hpp - simulated underwater acoustic channel
#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "uwm/config.hpp"
#include "uwm/types.hpp"

namespace uwm::chan {

struct Tap {
    double delay = 0.0;  // samples, fractional allowed
    double gain = 1.0;   // signed amplitude
};

// Noise spectrum shape as piecewise-linear dB level over frequency; the
// default is bottom-heavy (elevated below 1 kHz) like ambient water noise.
// level_offset_db shifts the whole floor to model location-to-location
// variation; it only matters where absolute level does (carrier sensing),
// not when a target SNR rescales the noise anyway.
struct NoiseProfile {
    std::vector<double> freq_hz{0.0, 800.0, 1000.0, 6000.0, 24000.0};
    std::vector<double> level_db{9.0, 9.0, 0.0, 0.0, -12.0};
    double level_offset_db = 0.0;
};

struct ChannelModel {
    std::vector<Tap> taps{{0.0, 1.0}};
    NoiseProfile noise;
    double snr_db = std::numeric_limits<double>::infinity();  // in-band, at receiver
    double doppler_hz = 0.0;  // carrier offset at the band center
    bool reciprocal = true;
    uint32_t seed = 1;
    std::string noise_wav;  // optional recorded noise to replay instead of synthesis
};

// Statistics for random multipath draws. Gains decay exponentially with
// delay; echo strength is then rescaled so the frequency response sports a
// notch of the drawn target depth (depth measured on a 10 Hz grid).
struct MultipathParams {
    int min_taps = 3;
    int max_taps = 8;
    double min_delay = 20.0;   // samples, echoes
    double max_delay = 480.0;  // bounded by the equalizer design length
    double decay_db = 15.0;    // gain decay across max_delay
    double notch_low_db = 10.0;
    double notch_high_db = 20.0;
};

std::vector<Tap> draw_taps(const MultipathParams& params, uint32_t seed);

// Band-bin frequency response of a tap set and its peak-to-trough depth.
CVec frequency_response(const std::vector<Tap>& taps, const ModemConfig& cfg);
double notch_depth_db(const std::vector<Tap>& taps, const ModemConfig& cfg);

// Colored noise with unit overall scale times the profile offset.
Vec shaped_noise(size_t len, const NoiseProfile& profile, uint32_t seed);

// y = taps * x, Doppler as fractional resampling, noise scaled so the
// in-band SNR over the signal's active span hits snr_db. Deterministic per
// seed; the tap/Doppler part is linear in the signal.
Vec apply_channel(const Vec& x, const ChannelModel& m);

// Forward/backward channels between two nodes. Reciprocal models share taps;
// otherwise the two directions draw independent multipath. Receiver noise is
// independent per direction either way.
std::pair<ChannelModel, ChannelModel> make_nonreciprocal_pair(const ChannelModel& base,
                                                              const MultipathParams& params,
                                                              uint32_t seed);

// Tap gains follow a smooth mean-reverting random walk with the given rate;
// rate 0 freezes the draw. Noise is not applied here: feed the output
// through an identity-tap ChannelModel to add it, so the wandering taps and
// the noise calibration stay independent. process() consumes signal time
// across calls; band_response() reports the current response between chunks.
class TimeVaryingChannel {
  public:
    TimeVaryingChannel(const ChannelModel& model, double rate_hz, double depth = 0.5);
    Vec process(const Vec& x);
    CVec band_response(const ModemConfig& cfg) const;
    const std::vector<Tap>& taps_now() const { return taps_; }

  private:
    void evolve(size_t n_samples);

    ChannelModel model_;
    double rate_hz_;
    double depth_;
    std::vector<Tap> base_taps_;
    std::vector<Tap> taps_;
    std::vector<double> wobble_;
    std::mt19937 rng_;
    Vec history_;
    double resample_next_ = 0.0;
    Vec resample_hist_;
};

// Same channel semantics with state persisting across push() calls, so a
// full-duplex simulation can feed block after block and splice the results.
// The noise level is calibrated once against reference_tx (a typical
// transmit frame); output is invariant to how the input is chunked.
class StreamingChannel {
  public:
    StreamingChannel(const ChannelModel& model, const Vec& reference_tx);
    Vec push(const Vec& x);

  private:
    ChannelModel model_;
    double noise_sigma_ = 0.0;
    Vec history_;  // input tail for the convolution
    double resample_next_ = 0.0;
    Vec resample_hist_;
    Vec shape_taps_;  // noise shaping filter
    Vec white_tail_;
    Vec noise_src_;  // recorded noise, when replaying
    size_t noise_src_pos_ = 0;
    std::mt19937 rng_;
    // Kept as a member: the distribution caches one of each generated pair,
    // and dropping that cache at a push boundary would shift the noise stream.
    std::normal_distribution<double> gauss_{0.0, 1.0};
};

// Structured config round-trip and measured-data import.
ChannelModel load_channel(const std::string& path);
void save_channel(const ChannelModel& m, const std::string& path);
std::vector<Tap> taps_from_impulse_response(const Vec& ir, int max_taps = 8,
                                            double threshold_rel = 0.05);

}  // namespace uwm::chan
