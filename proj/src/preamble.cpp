// preamble.cpp - CAZAC preamble build and two-stage detection
#include "uwm/preamble.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "uwm/dsp.hpp"

namespace uwm::pre {

namespace {

constexpr double kPi = 3.14159265358979323846;

// base symbol (sign +1) before transmit scaling
Vec base_symbol(const PreambleSpec& spec, const ModemConfig& cfg) {
    CVec zc = cazac_sequence(cfg.num_bins(), spec.cazac_root);
    return dsp::symbol_from_band_bins(zc, cfg.first_bin(), cfg.fft_size());
}

double transmit_scale(const PreambleSpec& spec, const ModemConfig& cfg) {
    Vec sym = base_symbol(spec, cfg);
    double peak = 0;
    for (double v : sym) peak = std::max(peak, std::fabs(v));
    return peak > 0 ? 0.9 / peak : 1.0;
}

}  // namespace

CVec cazac_sequence(int length, int root) {
    if (length < 1) throw std::invalid_argument("cazac_sequence: bad length");
    CVec zc(length);
    for (int n = 0; n < length; ++n) {
        // even lengths use n^2, odd use n(n+1): both give unit-magnitude,
        // zero-autocorrelation sequences
        const double q = (length % 2 == 0) ? (double)n * n : (double)n * (n + 1);
        zc[n] = std::exp(cplx(0.0, -kPi * root * q / length));
    }
    return zc;
}

CVec preamble_symbol_spectrum(const PreambleSpec& spec, const ModemConfig& cfg) {
    const double s = transmit_scale(spec, cfg);
    CVec zc = cazac_sequence(cfg.num_bins(), spec.cazac_root);
    CVec X(cfg.fft_size(), cplx(0.0, 0.0));
    for (int i = 0; i < cfg.num_bins(); ++i) {
        const int k = cfg.first_bin() + i;
        X[k] = zc[i] * s;
        X[cfg.fft_size() - k] = std::conj(X[k]);
    }
    return X;
}

Vec build_preamble(const PreambleSpec& spec, const ModemConfig& cfg) {
    cfg.validate();
    if (cfg.band_high_hz >= cfg.sample_rate / 2)
        throw std::invalid_argument("build_preamble: band outside Nyquist");
    Vec sym = base_symbol(spec, cfg);
    const double s = transmit_scale(spec, cfg);
    const int n = cfg.fft_size();
    Vec out((size_t)spec.n_symbols * n);
    for (int i = 0; i < spec.n_symbols; ++i)
        for (int t = 0; t < n; ++t) out[(size_t)i * n + t] = spec.pn_signs[i] * s * sym[t];
    return out;
}

std::vector<size_t> coarse_detect(const Vec& stream, const Vec& preamble, double threshold) {
    if (stream.size() <= preamble.size())
        throw std::invalid_argument("coarse_detect: stream not longer than preamble");
    Vec c = dsp::normalized_cross_correlate(stream, preamble);
    std::vector<size_t> out;
    const size_t merge_gap = preamble.size() / 2;
    size_t run_best = 0;
    bool in_run = false;
    size_t last_above = 0;
    for (size_t i = 0; i < c.size(); ++i) {
        if (std::fabs(c[i]) >= threshold) {
            if (!in_run || i - last_above > merge_gap) {
                if (in_run) out.push_back(run_best);
                in_run = true;
                run_best = i;
            } else if (std::fabs(c[i]) > std::fabs(c[run_best])) {
                run_best = i;
            }
            last_above = i;
        }
    }
    if (in_run) out.push_back(run_best);
    return out;
}

double sliding_metric(const Vec& stream, size_t offset, const PreambleSpec& spec,
                      const ModemConfig& cfg) {
    const size_t n = (size_t)cfg.fft_size();
    const size_t win = (size_t)spec.n_symbols * n;
    if (offset + win > stream.size())
        throw std::out_of_range("sliding_metric: window exceeds stream");
    double num = 0, den = 0;
    for (int i = 0; i + 1 < spec.n_symbols; ++i) {
        const int c = spec.pn_signs[i] * spec.pn_signs[i + 1];
        double dot = 0;
        const double* a = stream.data() + offset + (size_t)i * n;
        const double* b = a + n;
        for (size_t t = 0; t < n; ++t) dot += a[t] * b[t];
        num += c * dot;
    }
    for (size_t t = 0; t < win; ++t) den += stream[offset + t] * stream[offset + t];
    if (den <= 0) return 0.0;
    return std::max(0.0, num / den);
}

Vec sliding_metric_scan(const Vec& stream, size_t begin, size_t end, size_t step,
                        const PreambleSpec& spec, const ModemConfig& cfg) {
    const size_t n = (size_t)cfg.fft_size();
    const size_t win = (size_t)spec.n_symbols * n;
    if (step == 0) throw std::invalid_argument("sliding_metric_scan: zero step");
    if (end > stream.size()) end = stream.size();
    if (begin >= end) return {};

    // lagged products q[t] = x[t] * x[t+n] and their prefix sums, so each
    // adjacent-segment correlation is one prefix-sum difference
    const size_t q_len = stream.size() > n ? stream.size() - n : 0;
    Vec lag_prefix(q_len + 1, 0.0);
    for (size_t t = 0; t < q_len; ++t)
        lag_prefix[t + 1] = lag_prefix[t] + stream[t] * stream[t + n];
    Vec e_prefix = dsp::energy_prefix(stream);

    Vec out((end - begin + step - 1) / step, 0.0);
    for (size_t idx = 0, t = begin; t < end; t += step, ++idx) {
        if (t + win > stream.size()) break;  // remaining offsets score 0
        double num = 0;
        for (int i = 0; i + 1 < spec.n_symbols; ++i) {
            const int c = spec.pn_signs[i] * spec.pn_signs[i + 1];
            const size_t a = t + (size_t)i * n;
            num += c * (lag_prefix[a + n] - lag_prefix[a]);
        }
        const double den = e_prefix[t + win] - e_prefix[t];
        out[idx] = den > 0 ? std::max(0.0, num / den) : 0.0;
    }
    return out;
}

std::optional<SyncResult> detect_and_sync(const Vec& stream, const PreambleSpec& spec,
                                          const ModemConfig& cfg) {
    const size_t n = (size_t)cfg.fft_size();
    const size_t win = (size_t)spec.n_symbols * n;
    if (stream.size() <= win) return std::nullopt;

    // prefilter to the signal band: out-of-band noise would otherwise dilute
    // the energy-normalized metrics and push working-SNR peaks under 0.6
    Vec bp = dsp::design_bandpass(128, cfg.band_low_hz, cfg.band_high_hz, cfg.sample_rate);
    Vec filtered = dsp::filter_aligned(stream, bp);

    Vec preamble = build_preamble(spec, cfg);
    std::vector<size_t> candidates;
    try {
        candidates = coarse_detect(filtered, preamble, kCoarseThreshold);
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }

    bool found = false;
    SyncResult best{0, 0.0};
    for (size_t cand : candidates) {
        const size_t lo = cand > 2 * n ? cand - 2 * n : 0;
        const size_t hi = std::min(stream.size() - win + 1, cand + 2 * n);
        if (lo >= hi) continue;
        Vec m = sliding_metric_scan(filtered, lo, hi, kScanStep, spec, cfg);
        for (size_t i = 0; i < m.size(); ++i) {
            if (m[i] > best.peak_value) {
                best = SyncResult{lo + i * kScanStep, m[i]};
                found = true;
            }
        }
    }
    if (!found || best.peak_value < kDetectThreshold) return std::nullopt;

    // the metric peak is plateau-shaped; refine with the sharp matched filter
    // in a +-2 step window so the residual offset stays within one step
    const size_t refine = 4 * kScanStep;
    const size_t lo = best.sample_index > refine ? best.sample_index - refine : 0;
    const size_t hi = std::min(stream.size() - win, best.sample_index + refine);
    double best_dot = -1.0;
    size_t best_off = best.sample_index;
    for (size_t off = lo; off <= hi; ++off) {
        double dot = 0;
        const double* a = filtered.data() + off;
        for (size_t t = 0; t < win; ++t) dot += a[t] * preamble[t];
        if (std::fabs(dot) > best_dot) {
            best_dot = std::fabs(dot);
            best_off = off;
        }
    }
    best.sample_index = best_off;
    return best;
}

}  // namespace uwm::pre
