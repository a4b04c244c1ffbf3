// preamble.hpp - CAZAC preamble construction, detection and synchronization
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "uwm/config.hpp"
#include "uwm/types.hpp"

namespace uwm::pre {

// Eight identical OFDM symbols (no cyclic prefix), symbol i multiplied by
// pn_signs[i]; bins carry a constant-amplitude zero-autocorrelation sequence.
struct PreambleSpec {
    int n_symbols = 8;
    std::array<int, 8> pn_signs = {-1, 1, 1, 1, 1, 1, -1, 1};
    int cazac_root = 1;
};

struct SyncResult {
    size_t sample_index;  // preamble start in the stream
    double peak_value;    // sliding-correlation metric at the peak
};

// Zadoff-Chu sequence of the given (even or odd) length and root.
CVec cazac_sequence(int length, int root);

// The base symbol's full-FFT spectrum (sign +1), including the transmit
// scale applied by build_preamble; multiply by pn_signs[i] for symbol i.
CVec preamble_symbol_spectrum(const PreambleSpec& spec, const ModemConfig& cfg);

// Time-domain preamble, peak-normalized to 0.9 full scale.
Vec build_preamble(const PreambleSpec& spec, const ModemConfig& cfg);

// Offsets whose normalized cross-correlation against the template exceeds
// threshold, one candidate per contiguous above-threshold run (the run max).
// Loose by design; the sliding stage rejects false positives.
std::vector<size_t> coarse_detect(const Vec& stream, const Vec& preamble,
                                  double threshold = 0.35);

// Normalized self-similarity across the 8 PN-signed segments at one offset:
// sum of adjacent-segment correlations over total window energy, clamped to
// [0, 1]. A clean preamble scores 7/8; noise hovers near 0. Scale-invariant.
double sliding_metric(const Vec& stream, size_t offset, const PreambleSpec& spec,
                      const ModemConfig& cfg);

// Same metric evaluated at offsets begin, begin+step, ... (< end), computed
// with prefix sums of lagged products: O(1) per offset, numerically identical
// to sliding_metric. Offsets where the window overruns the stream score 0.
Vec sliding_metric_scan(const Vec& stream, size_t begin, size_t end, size_t step,
                        const PreambleSpec& spec, const ModemConfig& cfg);

// Full detector: coarse candidates, then the sliding metric with step 8 in a
// +-2 symbol window around each; returns the best peak above 0.6, if any.
std::optional<SyncResult> detect_and_sync(const Vec& stream, const PreambleSpec& spec,
                                          const ModemConfig& cfg);

constexpr double kDetectThreshold = 0.6;
constexpr double kCoarseThreshold = 0.35;
constexpr size_t kScanStep = 8;

}  // namespace uwm::pre
