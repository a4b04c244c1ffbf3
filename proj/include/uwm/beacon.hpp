// beacon.hpp - FSK distress beacon: a 6-bit ID keyed onto two audible tones
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "uwm/types.hpp"

namespace uwm::beacon {

constexpr int kBeaconBits = 6;

// One tone per bit: f0 carries a 0, f1 carries a 1, MSB first.  A dual-tone
// burst (both frequencies at once) precedes the data and marks the onset.
struct BeaconConfig {
    double f0_hz = 2000.0;
    double f1_hz = 3000.0;
    double symbol_s = 0.1;  // 0.05 / 0.1 / 0.2 s per bit -> 20 / 10 / 5 bit/s
    double onset_s = 0.1;
    double sample_rate = 48000.0;
    double amplitude = 0.9;

    double bit_rate() const { return 1.0 / symbol_s; }
    int symbol_samples() const { return (int)std::lround(symbol_s * sample_rate); }
    int onset_samples() const { return (int)std::lround(onset_s * sample_rate); }

    void validate() const {
        if (f0_hz < 1500.0 || f0_hz > 4000.0 || f1_hz < 1500.0 || f1_hz > 4000.0)
            throw std::invalid_argument("beacon: tones must stay within 1.5-4 kHz");
        if (f0_hz == f1_hz) throw std::invalid_argument("beacon: tones must differ");
        if (symbol_s <= 0 || onset_s <= 0 || sample_rate <= 0)
            throw std::invalid_argument("beacon: durations and rate must be positive");
        if (amplitude <= 0 || amplitude > 1.0)
            throw std::invalid_argument("beacon: amplitude must be in (0, 1]");
    }
};

Vec beacon_encode(int id, const BeaconConfig& cfg);
std::optional<int> beacon_decode(const Vec& stream, const BeaconConfig& cfg);

}  // namespace uwm::beacon
