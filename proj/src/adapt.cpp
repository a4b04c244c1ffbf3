// adapt.cpp - per-bin SNR estimation, contiguous band selection, feedback tones
#include "uwm/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "uwm/dsp.hpp"
#include "uwm/preamble.hpp"

namespace uwm::adapt {
namespace {

constexpr double kSnrCapLowDb = -30.0;
constexpr double kSnrCapHighDb = 40.0;
// Guard bins skipped on each side of the occupied band and of DC/Nyquist when
// sampling the noise floor, keeping filter skirts and leakage out of it.
constexpr int kNoiseGuardBins = 4;
// A window qualifies as a feedback symbol when its two strongest in-band bins
// hold more than this fraction of the total in-band power.
constexpr double kProminenceThreshold = 0.5;
// Second tone treated as absent (single-bin selection) only when it is both
// far below the first tone and indistinct from the remaining bins' floor.
constexpr double kDegenerateRatio = 0.1;
constexpr double kDegenerateFloorFactor = 10.0;
constexpr size_t kFeedbackScanStep = 16;

void check_spectra(const std::vector<CVec>& rx_full, const std::vector<CVec>& tx_full,
                   const ModemConfig& cfg) {
    if (rx_full.empty() || rx_full.size() != tx_full.size()) {
        throw std::invalid_argument("spectra lists empty or mismatched");
    }
    const size_t n = static_cast<size_t>(cfg.fft_size());
    for (size_t i = 0; i < rx_full.size(); ++i) {
        if (rx_full[i].size() != n || tx_full[i].size() != n) {
            throw std::invalid_argument("spectrum length does not match FFT size");
        }
    }
}

}  // namespace

double estimate_noise_var(const std::vector<CVec>& rx_full, const ModemConfig& cfg) {
    if (rx_full.empty()) throw std::invalid_argument("no spectra");
    const int n = cfg.fft_size();
    const int lo = cfg.first_bin();
    const int hi = lo + cfg.num_bins() - 1;
    double acc = 0.0;
    size_t count = 0;
    for (const CVec& spec : rx_full) {
        if (spec.size() != static_cast<size_t>(n)) {
            throw std::invalid_argument("spectrum length does not match FFT size");
        }
        for (int k = kNoiseGuardBins; k <= n / 2 - kNoiseGuardBins; ++k) {
            if (k >= lo - kNoiseGuardBins && k <= hi + kNoiseGuardBins) continue;
            acc += std::norm(spec[static_cast<size_t>(k)]);
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("no out-of-band bins available");
    return acc / static_cast<double>(count);
}

CVec estimate_channel(const std::vector<CVec>& rx_full, const std::vector<CVec>& tx_full,
                      const ModemConfig& cfg) {
    check_spectra(rx_full, tx_full, cfg);
    const double noise_var = estimate_noise_var(rx_full, cfg);
    const int lo = cfg.first_bin();
    const int nb = cfg.num_bins();
    CVec h(static_cast<size_t>(nb));
    for (int b = 0; b < nb; ++b) {
        const size_t k = static_cast<size_t>(lo + b);
        cplx cross = 0.0;
        double power = 0.0;
        for (size_t i = 0; i < rx_full.size(); ++i) {
            cross += std::conj(tx_full[i][k]) * rx_full[i][k];
            power += std::norm(tx_full[i][k]);
        }
        if (power <= 0.0) throw std::invalid_argument("transmit bin empty across all symbols");
        h[static_cast<size_t>(b)] = cross / (power + noise_var);
    }
    return h;
}

std::vector<double> estimate_snr(const CVec& H, const std::vector<CVec>& rx_full,
                                 const std::vector<CVec>& tx_full, const ModemConfig& cfg) {
    check_spectra(rx_full, tx_full, cfg);
    const int lo = cfg.first_bin();
    const int nb = cfg.num_bins();
    if (H.size() != static_cast<size_t>(nb)) {
        throw std::invalid_argument("channel estimate length does not match band");
    }
    std::vector<double> snr(static_cast<size_t>(nb));
    for (int b = 0; b < nb; ++b) {
        const size_t k = static_cast<size_t>(lo + b);
        double sig = 0.0, err = 0.0;
        for (size_t i = 0; i < rx_full.size(); ++i) {
            const cplx model = H[static_cast<size_t>(b)] * tx_full[i][k];
            sig += std::norm(model);
            err += std::norm(rx_full[i][k] - model);
        }
        double db;
        if (err <= 0.0) {
            db = kSnrCapHighDb;
        } else if (sig <= 0.0) {
            db = kSnrCapLowDb;
        } else {
            db = 10.0 * std::log10(sig / err);
        }
        snr[static_cast<size_t>(b)] = std::clamp(db, kSnrCapLowDb, kSnrCapHighDb);
    }
    return snr;
}

namespace {

// Full transmit spectra of the known preamble symbols, and the matching
// received segments cut from the stream (the preamble carries no cyclic
// prefixes, so segments tile back to back).
void preamble_spectra(const Vec& stream, size_t preamble_start, const pre::PreambleSpec& spec,
                      const ModemConfig& cfg, std::vector<CVec>& rx_full,
                      std::vector<CVec>& tx_full) {
    const size_t n = static_cast<size_t>(cfg.fft_size());
    const size_t n_sym = static_cast<size_t>(spec.n_symbols);
    if (preamble_start + n_sym * n > stream.size()) {
        throw std::out_of_range("stream too short for preamble at given start");
    }
    const CVec base = pre::preamble_symbol_spectrum(spec, cfg);
    rx_full.clear();
    tx_full.clear();
    CVec seg(n);
    for (size_t i = 0; i < n_sym; ++i) {
        for (size_t t = 0; t < n; ++t) {
            seg[t] = stream[preamble_start + i * n + t];
        }
        rx_full.push_back(dsp::fft(seg));
        CVec tx = base;
        const double sign = spec.pn_signs[i];
        for (cplx& v : tx) v *= sign;
        tx_full.push_back(std::move(tx));
    }
}

}  // namespace

std::vector<double> preamble_snr(const Vec& stream, size_t preamble_start,
                                 const pre::PreambleSpec& spec, const ModemConfig& cfg) {
    std::vector<CVec> rx_full, tx_full;
    preamble_spectra(stream, preamble_start, spec, cfg, rx_full, tx_full);
    const CVec h = estimate_channel(rx_full, tx_full, cfg);
    return estimate_snr(h, rx_full, tx_full, cfg);
}

CVec preamble_channel(const Vec& stream, size_t preamble_start, const pre::PreambleSpec& spec,
                      const ModemConfig& cfg) {
    std::vector<CVec> rx_full, tx_full;
    preamble_spectra(stream, preamble_start, spec, cfg, rx_full, tx_full);
    return estimate_channel(rx_full, tx_full, cfg);
}

BandSelection select_band(const std::vector<double>& snr_db, double eps_snr, double lambda) {
    const int n0 = static_cast<int>(snr_db.size());
    if (n0 == 0) throw std::invalid_argument("empty SNR vector");
    for (int width = n0; width >= 1; --width) {
        const double boost =
            lambda * 10.0 * std::log10(static_cast<double>(n0) / static_cast<double>(width));
        for (int m = 0; m + width <= n0; ++m) {
            double lo = snr_db[static_cast<size_t>(m)];
            for (int k = m + 1; k < m + width; ++k) {
                lo = std::min(lo, snr_db[static_cast<size_t>(k)]);
            }
            if (lo + boost > eps_snr) {
                return BandSelection{m, m + width - 1, false};
            }
        }
    }
    const int best = static_cast<int>(
        std::max_element(snr_db.begin(), snr_db.end()) - snr_db.begin());
    return BandSelection{best, best, true};
}

Vec encode_feedback(const BandSelection& sel, const ModemConfig& cfg) {
    const int nb = cfg.num_bins();
    if (sel.m < 0 || sel.n < sel.m || sel.n >= nb) {
        throw std::invalid_argument("selection outside configured band");
    }
    // Anchor the tone scale to the preamble's per-bin magnitude so the symbol
    // radiates the same band power as every other transmission; concentrating
    // that power in one or two bins multiplies the per-bin amplitude.
    const CVec pre_spec = pre::preamble_symbol_spectrum(pre::PreambleSpec{}, cfg);
    const double pre_amp = std::abs(pre_spec[static_cast<size_t>(cfg.first_bin())]);
    CVec vals(static_cast<size_t>(nb), 0.0);
    if (sel.m == sel.n) {
        vals[static_cast<size_t>(sel.m)] = pre_amp * std::sqrt(static_cast<double>(nb));
    } else {
        const double amp = pre_amp * std::sqrt(static_cast<double>(nb) / 2.0);
        vals[static_cast<size_t>(sel.m)] = amp;
        vals[static_cast<size_t>(sel.n)] = amp;
    }
    return dsp::symbol_from_band_bins(vals, cfg.first_bin(), cfg.fft_size());
}

std::optional<BandSelection> decode_feedback(const Vec& stream, size_t begin, size_t len,
                                             const ModemConfig& cfg) {
    const size_t n = static_cast<size_t>(cfg.fft_size());
    if (begin > stream.size() || len > stream.size() - begin) {
        throw std::out_of_range("feedback search window outside stream");
    }
    if (len < n) return std::nullopt;
    const int lo = cfg.first_bin();
    const int nb = cfg.num_bins();

    double best_prom = 0.0;
    int best_a = -1, best_b = -1;
    double best_p1 = 0.0, best_p2 = 0.0, best_floor = 0.0;
    CVec seg(n);
    std::vector<double> power(static_cast<size_t>(nb));
    for (size_t off = 0; off + n <= len; off += kFeedbackScanStep) {
        for (size_t t = 0; t < n; ++t) seg[t] = stream[begin + off + t];
        const CVec spec = dsp::fft(seg);
        double total = 0.0;
        for (int b = 0; b < nb; ++b) {
            power[static_cast<size_t>(b)] = std::norm(spec[static_cast<size_t>(lo + b)]);
            total += power[static_cast<size_t>(b)];
        }
        if (total <= 0.0) continue;
        int i1 = 0;
        for (int b = 1; b < nb; ++b) {
            if (power[static_cast<size_t>(b)] > power[static_cast<size_t>(i1)]) i1 = b;
        }
        int i2 = (i1 == 0) ? 1 : 0;
        for (int b = 0; b < nb; ++b) {
            if (b != i1 && power[static_cast<size_t>(b)] > power[static_cast<size_t>(i2)]) i2 = b;
        }
        const double p1 = power[static_cast<size_t>(i1)];
        const double p2 = power[static_cast<size_t>(i2)];
        const double prom = (p1 + p2) / total;
        if (prom > best_prom) {
            best_prom = prom;
            best_a = i1;
            best_b = i2;
            best_p1 = p1;
            best_p2 = p2;
            std::vector<double> rest;
            rest.reserve(static_cast<size_t>(nb) - 2);
            for (int b = 0; b < nb; ++b) {
                if (b != i1 && b != i2) rest.push_back(power[static_cast<size_t>(b)]);
            }
            std::nth_element(rest.begin(), rest.begin() + rest.size() / 2, rest.end());
            best_floor = rest.empty() ? 0.0 : rest[rest.size() / 2];
        }
    }
    if (best_prom <= kProminenceThreshold || best_a < 0) return std::nullopt;
    // Two rungs: an essentially absent second bin (clean single tone), or one
    // both well below the first tone and lost in the remaining bins' floor. A
    // merely attenuated second tone that still stands clear of the floor keeps
    // its pair reading.
    const bool degenerate = best_p2 <= 1e-9 * best_p1 ||
                            (best_p2 < kDegenerateRatio * best_p1 &&
                             best_p2 < kDegenerateFloorFactor * best_floor);
    if (degenerate) {
        return BandSelection{best_a, best_a, false};
    }
    return BandSelection{std::min(best_a, best_b), std::max(best_a, best_b), false};
}

}  // namespace uwm::adapt
