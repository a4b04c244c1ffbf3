// adapt.hpp - per-bin SNR estimation, contiguous band selection, feedback tones
#pragma once

#include <optional>
#include <vector>

#include "uwm/config.hpp"
#include "uwm/preamble.hpp"
#include "uwm/types.hpp"

namespace uwm::adapt {

// Contiguous run of usable bins [m, n] (indices within the configured band).
// below_threshold marks the no-feasible-band fallback: the single best bin,
// surfaced so the protocol can proceed at minimum rate.
struct BandSelection {
    int m = 0;
    int n = 0;
    bool below_threshold = false;
};
inline int band_width(const BandSelection& s) { return s.n - s.m + 1; }

// Noise variance per complex FFT bin, estimated from out-of-band bins of the
// received symbol spectra (the transmitter leaves them empty).
double estimate_noise_var(const std::vector<CVec>& rx_full, const ModemConfig& cfg);

// Per-bin channel estimate over the repeated preamble symbols, shrunk toward
// zero by the out-of-band noise estimate (the regularizer that makes this the
// mean-square-error-minimizing estimate rather than a plain ratio).
// rx_full/tx_full: one full FFT spectrum per preamble symbol.
// Throws if an in-band transmit bin is zero across all symbols.
CVec estimate_channel(const std::vector<CVec>& rx_full, const std::vector<CVec>& tx_full,
                      const ModemConfig& cfg);

// Per-bin SNR in dB: 20 log10(||H x|| / ||y - H x||) stacked over the
// repetitions, capped to [-30, +40] (cap hit when the residual is ~zero).
std::vector<double> estimate_snr(const CVec& H, const std::vector<CVec>& rx_full,
                                 const std::vector<CVec>& tx_full, const ModemConfig& cfg);

// Convenience: slice the 8 preamble segments out of a synchronized stream and
// run the estimators against the known transmitted preamble.
std::vector<double> preamble_snr(const Vec& stream, size_t preamble_start,
                                 const pre::PreambleSpec& spec, const ModemConfig& cfg);
CVec preamble_channel(const Vec& stream, size_t preamble_start, const pre::PreambleSpec& spec,
                      const ModemConfig& cfg);

// Widest contiguous window whose minimum SNR, boosted by the power-
// reallocation term lambda*10*log10(N0/L), clears eps_snr; ties broken by the
// smallest start. If nothing passes, returns the best single bin flagged
// below_threshold.
BandSelection select_band(const std::vector<double>& snr_db, double eps_snr, double lambda);

// One bare OFDM symbol carrying the selection: total transmit power split
// across bins m and n only (all of it in one bin when m = n).
Vec encode_feedback(const BandSelection& sel, const ModemConfig& cfg);

// Slide an FFT window over stream[begin, begin+len) and pick the window and
// top-2 bins maximizing two-tone prominence; absent when no window's top-2
// power clears half the in-band total.
std::optional<BandSelection> decode_feedback(const Vec& stream, size_t begin, size_t len,
                                             const ModemConfig& cfg);

}  // namespace uwm::adapt
