// beacon.cpp - FSK distress beacon encode/decode
#include "uwm/beacon.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "uwm/dsp.hpp"

namespace uwm::beacon {

namespace {

const double kTwoPi = 2.0 * std::acos(-1.0);

constexpr double kOnsetOverMedian = 12.0;  // dual-tone peak vs. background metric
constexpr double kPlateauFraction = 0.5;

void add_tone(Vec& x, size_t begin, size_t len, double freq, double amp, double rate) {
    for (size_t i = 0; i < len && begin + i < x.size(); ++i) {
        x[begin + i] += amp * std::sin(kTwoPi * freq * static_cast<double>(i) / rate);
    }
}

// Large only where both tones sound at the same instant.  The window is cut
// into quarters and the weakest tone power across them is taken: a window
// straddling a bit boundary carries the two tones in disjoint halves (which
// can match the onset's per-tone energy exactly, since data tones are twice
// the onset amplitude), but some quarter of it is then single-tone.
double dual_metric(const Vec& x, size_t begin, size_t len, const BeaconConfig& cfg) {
    const double p0 = dsp::goertzel_power(x, begin, len, cfg.f0_hz, cfg.sample_rate);
    const double p1 = dsp::goertzel_power(x, begin, len, cfg.f1_hz, cfg.sample_rate);
    return std::min(p0, p1);
}

}  // namespace

Vec beacon_encode(int id, const BeaconConfig& cfg) {
    cfg.validate();
    if (id < 0 || id >= (1 << kBeaconBits)) {
        throw std::invalid_argument("beacon: id must fit in 6 bits");
    }
    const size_t onset = static_cast<size_t>(cfg.onset_samples());
    const size_t sym = static_cast<size_t>(cfg.symbol_samples());
    Vec x(onset + kBeaconBits * sym, 0.0);
    add_tone(x, 0, onset, cfg.f0_hz, cfg.amplitude / 2.0, cfg.sample_rate);
    add_tone(x, 0, onset, cfg.f1_hz, cfg.amplitude / 2.0, cfg.sample_rate);
    for (int b = 0; b < kBeaconBits; ++b) {
        const int bit = (id >> (kBeaconBits - 1 - b)) & 1;
        add_tone(x, onset + static_cast<size_t>(b) * sym, sym, bit ? cfg.f1_hz : cfg.f0_hz,
                 cfg.amplitude, cfg.sample_rate);
    }
    return x;
}

std::optional<int> beacon_decode(const Vec& stream, const BeaconConfig& cfg) {
    cfg.validate();
    const size_t onset = static_cast<size_t>(cfg.onset_samples());
    const size_t sym = static_cast<size_t>(cfg.symbol_samples());
    // Keep the window no longer than 4/5 of either the onset or one symbol:
    // windows that fit strictly inside a single bit see only one tone, which
    // carves low-metric valleys between the onset plateau and any bit
    // transition, keeping the plateau runs separable.
    const size_t w = std::max<size_t>(32, std::min(onset, sym) * 4 / 5);
    if (stream.size() < onset + kBeaconBits * sym) return std::nullopt;

    // Coarse scan of the dual-tone metric over the whole stream.
    const size_t coarse = std::max<size_t>(1, w / 16);
    std::vector<double> metric;
    std::vector<size_t> pos;
    for (size_t t = 0; t + w <= stream.size(); t += coarse) {
        metric.push_back(dual_metric(stream, t, w, cfg));
        pos.push_back(t);
    }
    if (metric.empty()) return std::nullopt;
    const double peak = *std::max_element(metric.begin(), metric.end());
    std::vector<double> sorted = metric;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2),
                     sorted.end());
    const double background = sorted[sorted.size() / 2];
    if (peak <= 1e-12 || peak < kOnsetOverMedian * background) return std::nullopt;

    // The metric plateaus while the window sits fully inside the onset burst.
    // A window straddling a bit transition in the data section also scores
    // high (each tone fills half the window at double the onset amplitude),
    // but such windows form isolated runs separated from the onset plateau by
    // near-zero valleys, so we keep only the first contiguous run above
    // threshold.  Locate its edges at fine resolution and take their
    // midpoint, which cancels the edge bias of the half-power crossings.
    size_t i0 = metric.size();
    for (size_t i = 0; i < metric.size(); ++i) {
        if (metric[i] >= kPlateauFraction * peak) {
            i0 = i;
            break;
        }
    }
    if (i0 == metric.size()) return std::nullopt;
    size_t i1 = i0;
    while (i1 + 1 < metric.size() && metric[i1 + 1] >= kPlateauFraction * peak) ++i1;
    const size_t first_c = pos[i0];
    const size_t last_c = pos[i1];
    const size_t fine = std::max<size_t>(1, w / 64);
    auto refine = [&](size_t around, bool forward) {
        size_t lo = around > coarse ? around - coarse : 0;
        size_t hi = std::min(stream.size() - w, around + coarse);
        size_t found = around;
        if (forward) {  // first fine position on the plateau
            for (size_t t = lo; t <= hi; t += fine) {
                if (dual_metric(stream, t, w, cfg) >= kPlateauFraction * peak) return t;
            }
        } else {  // last fine position on the plateau
            for (size_t t = lo; t <= hi; t += fine) {
                if (dual_metric(stream, t, w, cfg) >= kPlateauFraction * peak) found = t;
            }
        }
        return found;
    };
    const double rise = static_cast<double>(refine(first_c, true));
    const double fall = static_cast<double>(refine(last_c, false));
    // rise sits below the true start and fall above it by the same half-power
    // overlap of the window, so their midpoint is bias-free.
    const double mid = (rise + fall) / 2.0;
    const double onset_start = mid - static_cast<double>(onset) / 2.0 + static_cast<double>(w) / 2.0;
    const double data_base = onset_start + static_cast<double>(onset);

    // Decode against a small set of alignment hypotheses around the estimate
    // and keep the most confident one; this absorbs both estimation error and
    // onset offsets of at least +/-10% of a symbol.
    const long span = static_cast<long>(sym) / 4;
    const long hstep = std::max<long>(1, static_cast<long>(sym) / 16);
    const size_t bitw = sym * 7 / 10;  // central window, clear of the edges
    double best_score = -1.0;
    int best_id = 0;
    for (long h = -span; h <= span; h += hstep) {
        double score = 0.0;
        int id = 0;
        bool valid = true;
        for (int b = 0; b < kBeaconBits && valid; ++b) {
            const double t0 = data_base + static_cast<double>(h) +
                              static_cast<double>(b) * static_cast<double>(sym) +
                              0.15 * static_cast<double>(sym);
            if (t0 < 0 || static_cast<size_t>(t0) + bitw > stream.size()) {
                valid = false;
                break;
            }
            const size_t t = static_cast<size_t>(t0);
            const double p0 = dsp::goertzel_power(stream, t, bitw, cfg.f0_hz, cfg.sample_rate);
            const double p1 = dsp::goertzel_power(stream, t, bitw, cfg.f1_hz, cfg.sample_rate);
            score += std::abs(p1 - p0) / (p1 + p0 + 1e-30);
            if (p1 > p0) id |= 1 << (kBeaconBits - 1 - b);
        }
        if (valid && score > best_score) {
            best_score = score;
            best_id = id;
        }
    }
    if (best_score < 0.0) return std::nullopt;
    return best_id;
}

}  // namespace uwm::beacon
