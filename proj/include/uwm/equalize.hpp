// equalize.hpp - time-domain least-squares channel equalizer
#pragma once

#include <cstddef>

#include "uwm/types.hpp"

namespace uwm::eq {

struct EqualizerConfig {
    int length = 480;  // filter taps
    int delay = 64;    // reference lead: estimate x[t] from rx[.. t+delay]
    // Added to the diagonal of the normal equations on top of the built-in
    // relative ridge; pass a noise-energy estimate to damp noise enhancement.
    double diag_load = 0.0;
};

// Fit taps g minimizing sum_t |ref[t] - sum_tau g[tau] rx[rx_begin+t+delay-tau]|^2
// over the whole reference. Out-of-range rx samples read as zero.
Vec train_equalizer(const Vec& rx, size_t rx_begin, const Vec& ref, const EqualizerConfig& ec);

// Run the fitted filter: out[t] = sum_tau g[tau] rx[rx_begin+t+delay-tau]
// for t in [0, out_len).
Vec apply_equalizer(const Vec& rx, size_t rx_begin, size_t out_len, const Vec& g, int delay);

// Residual level in dB: 20 log10(||a - b|| / ||b||).
double residual_db(const Vec& a, const Vec& b);

}  // namespace uwm::eq
