// channel.cpp - simulated underwater acoustic channel
#include "uwm/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "nlohmann/json.hpp"
#include "uwm/dsp.hpp"
#include "uwm/wav.hpp"

namespace uwm::chan {
namespace {

const double kPi = std::acos(-1.0);
constexpr double kRate = 48000.0;
constexpr double kBandLow = 1000.0;
constexpr double kBandHigh = 4000.0;
constexpr double kBandCenter = 2500.0;  // Doppler reference frequency
constexpr int kBandpassOrder = 128;
constexpr int kShapeTaps = 257;
constexpr double kActiveSpanRel = 1e-3;  // |y| threshold for the SNR span
constexpr size_t kEvolveBlock = 64;      // samples between tap updates

uint32_t mix_seed(uint32_t seed, uint32_t salt) {
    uint32_t h = seed * 2654435761u + salt * 0x9e3779b9u + 0x85ebca6bu;
    h ^= h >> 15;
    h *= 0x2c2ae35du;
    h ^= h >> 13;
    return h;
}

double sample_or_zero(const Vec& x, long long idx) {
    if (idx < 0 || idx >= static_cast<long long>(x.size())) return 0.0;
    return x[static_cast<size_t>(idx)];
}

// 4-point cubic Lagrange read of x at fractional position u, zeros outside.
double frac_sample(const Vec& x, double u) {
    const double fl = std::floor(u);
    const long long i = static_cast<long long>(fl);
    const double f = u - fl;
    if (f < 1e-12) return sample_or_zero(x, i);
    const double xm1 = sample_or_zero(x, i - 1);
    const double x0 = sample_or_zero(x, i);
    const double x1 = sample_or_zero(x, i + 1);
    const double x2 = sample_or_zero(x, i + 2);
    const double wm1 = -f * (f - 1.0) * (f - 2.0) / 6.0;
    const double w0 = (f * f - 1.0) * (f - 2.0) / 2.0;
    const double w1 = -f * (f + 1.0) * (f - 2.0) / 2.0;
    const double w2 = f * (f * f - 1.0) / 6.0;
    return wm1 * xm1 + w0 * x0 + w1 * x1 + w2 * x2;
}

double max_tap_delay(const std::vector<Tap>& taps) {
    double d = 0.0;
    for (const Tap& t : taps) d = std::max(d, t.delay);
    return d;
}

void check_taps(const std::vector<Tap>& taps) {
    if (taps.empty()) throw std::invalid_argument("channel has no taps");
    for (const Tap& t : taps) {
        if (t.delay < 0.0) throw std::invalid_argument("negative tap delay");
    }
}

// out[t] = sum_i gain_i * x(base + t - delay_i); out length n.
Vec tap_convolve(const Vec& x, double base, size_t n, const std::vector<Tap>& taps) {
    Vec out(n, 0.0);
    for (const Tap& tap : taps) {
        const double start = base - tap.delay;
        const double fl = std::floor(start);
        if (start - fl < 1e-12) {
            // Integer delay: plain shifted add, exact.
            const long long s = static_cast<long long>(fl);
            for (size_t t = 0; t < n; ++t) {
                out[t] += tap.gain * sample_or_zero(x, s + static_cast<long long>(t));
            }
        } else {
            for (size_t t = 0; t < n; ++t) {
                out[t] += tap.gain * frac_sample(x, start + static_cast<double>(t));
            }
        }
    }
    return out;
}

Vec multipath(const Vec& x, const std::vector<Tap>& taps) {
    check_taps(taps);
    const size_t tail = static_cast<size_t>(std::ceil(max_tap_delay(taps))) + 2;
    return tap_convolve(x, 0.0, x.size() + tail, taps);
}

// Streaming fractional resampler: emits x(next + n*factor) as far as the
// accumulated input allows; hist keeps the unconsumed tail.
Vec resample_push(Vec& hist, double& next_t, const Vec& chunk, double factor) {
    Vec ext;
    ext.reserve(hist.size() + chunk.size());
    ext.insert(ext.end(), hist.begin(), hist.end());
    ext.insert(ext.end(), chunk.begin(), chunk.end());
    Vec out;
    const long long len = static_cast<long long>(ext.size());
    while (static_cast<long long>(std::floor(next_t)) + 2 <= len - 1) {
        out.push_back(frac_sample(ext, next_t));
        next_t += factor;
    }
    const long long keep_from = std::max(0LL, static_cast<long long>(std::floor(next_t)) - 1);
    hist.assign(ext.begin() + keep_from, ext.end());
    next_t -= static_cast<double>(keep_from);
    return out;
}

double doppler_factor(double doppler_hz) { return 1.0 + doppler_hz / kBandCenter; }

double interp_level_db(const NoiseProfile& p, double f) {
    const size_t n = p.freq_hz.size();
    if (n < 2 || p.level_db.size() != n) {
        throw std::invalid_argument("noise profile needs matching freq/level lists");
    }
    if (f <= p.freq_hz.front()) return p.level_db.front();
    if (f >= p.freq_hz.back()) return p.level_db.back();
    for (size_t i = 1; i < n; ++i) {
        if (f <= p.freq_hz[i]) {
            const double a = p.freq_hz[i - 1], b = p.freq_hz[i];
            if (b <= a) throw std::invalid_argument("noise profile frequencies not ascending");
            const double w = (f - a) / (b - a);
            return p.level_db[i - 1] * (1.0 - w) + p.level_db[i] * w;
        }
    }
    return p.level_db.back();
}

// Linear-phase FIR matching the profile's amplitude shape, by frequency
// sampling of the desired response.
Vec shaping_taps(const NoiseProfile& p) {
    const int nfft = 2048;
    CVec spec(static_cast<size_t>(nfft), 0.0);
    for (int k = 0; k <= nfft / 2; ++k) {
        const double f = static_cast<double>(k) * kRate / nfft;
        const double a = std::pow(10.0, interp_level_db(p, f) / 20.0);
        spec[static_cast<size_t>(k)] = a;
        if (k > 0 && k < nfft / 2) spec[static_cast<size_t>(nfft - k)] = a;
    }
    const Vec h = dsp::ifft_real(spec);  // zero-phase impulse, peak at index 0
    Vec taps(kShapeTaps);
    const int half = kShapeTaps / 2;
    for (int i = 0; i < kShapeTaps; ++i) {
        const int src = ((i - half) % nfft + nfft) % nfft;
        const double w = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (kShapeTaps - 1));
        taps[static_cast<size_t>(i)] = h[static_cast<size_t>(src)] * w;
    }
    return taps;
}

Vec white_noise(size_t len, std::mt19937& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec out(len);
    for (double& v : out) v = g(rng);
    return out;
}

// Contiguous sample range where the signal is meaningfully present.
std::pair<size_t, size_t> active_span(const Vec& y) {
    double peak = 0.0;
    for (double v : y) peak = std::max(peak, std::abs(v));
    if (peak <= 0.0) return {0, 0};
    const double thr = kActiveSpanRel * peak;
    size_t first = 0, last = y.size();
    while (first < y.size() && std::abs(y[first]) <= thr) ++first;
    while (last > first && std::abs(y[last - 1]) <= thr) --last;
    return {first, last};
}

double band_energy_over(const Vec& y, size_t first, size_t last) {
    const Vec taps = dsp::design_bandpass(kBandpassOrder, kBandLow, kBandHigh, kRate);
    const Vec f = dsp::filter_aligned(y, taps);
    double e = 0.0;
    for (size_t t = first; t < last; ++t) e += f[t] * f[t];
    return e;
}

Vec looped_wav_noise(const std::string& path, size_t len, uint32_t seed) {
    const SampleBuffer buf = read_wav(path);
    if (buf.samples.empty()) throw std::runtime_error("empty noise recording: " + path);
    Vec out(len);
    size_t pos = static_cast<size_t>(mix_seed(seed, 0xA0)) % buf.samples.size();
    for (size_t i = 0; i < len; ++i) {
        out[i] = buf.samples[pos];
        pos = (pos + 1) % buf.samples.size();
    }
    return out;
}

// Depth measured on a fine 10 Hz grid so narrow notches are not missed.
double depth_fine_db(const std::vector<Tap>& taps) {
    ModemConfig fine;
    fine.subcarrier_spacing = 10.0;
    return notch_depth_db(taps, fine);
}

}  // namespace

std::vector<Tap> draw_taps(const MultipathParams& params, uint32_t seed) {
    if (params.min_taps < 2 || params.max_taps < params.min_taps) {
        throw std::invalid_argument("tap count range must allow at least one echo");
    }
    if (!(params.min_delay > 0.0) || params.max_delay <= params.min_delay) {
        throw std::invalid_argument("bad delay range");
    }
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> count_d(params.min_taps, params.max_taps);
    std::uniform_real_distribution<double> delay_d(params.min_delay, params.max_delay);
    std::uniform_real_distribution<double> jitter_d(-3.0, 3.0);
    std::uniform_real_distribution<double> depth_d(params.notch_low_db, params.notch_high_db);
    std::uniform_int_distribution<int> sign_d(0, 1);

    for (int attempt = 0; attempt < 40; ++attempt) {
        const int n = count_d(rng);
        std::vector<Tap> echoes(static_cast<size_t>(n - 1));
        double mag_sum = 0.0;
        for (Tap& e : echoes) {
            e.delay = delay_d(rng);
            const double mag = std::pow(10.0, (-params.decay_db * e.delay / params.max_delay +
                                               jitter_d(rng)) /
                                                  20.0);
            e.gain = sign_d(rng) ? mag : -mag;
            mag_sum += mag;
        }
        std::sort(echoes.begin(), echoes.end(),
                  [](const Tap& a, const Tap& b) { return a.delay < b.delay; });
        for (Tap& e : echoes) e.gain /= mag_sum;  // sum of echo magnitudes = 1

        const double target = depth_d(rng);
        auto with_scale = [&](double s) {
            std::vector<Tap> taps{{0.0, 1.0}};
            for (const Tap& e : echoes) taps.push_back({e.delay, s * e.gain});
            return taps;
        };
        const double s_hi = 0.999;
        if (depth_fine_db(with_scale(s_hi)) < target) continue;  // geometry can't reach it
        double lo = 0.0, hi = s_hi;
        for (int it = 0; it < 50; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (depth_fine_db(with_scale(mid)) < target) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        std::vector<Tap> taps = with_scale(hi);
        if (std::abs(depth_fine_db(taps) - target) > 0.5) continue;
        double energy = 0.0;
        for (const Tap& t : taps) energy += t.gain * t.gain;
        const double norm = 1.0 / std::sqrt(energy);
        for (Tap& t : taps) t.gain *= norm;
        return taps;
    }
    throw std::runtime_error("multipath notch calibration failed to converge");
}

CVec frequency_response(const std::vector<Tap>& taps, const ModemConfig& cfg) {
    check_taps(taps);
    const int n = cfg.fft_size();
    CVec h(static_cast<size_t>(cfg.num_bins()), 0.0);
    for (int b = 0; b < cfg.num_bins(); ++b) {
        const double w = 2.0 * kPi * static_cast<double>(cfg.first_bin() + b) / n;
        cplx acc = 0.0;
        for (const Tap& t : taps) acc += t.gain * std::polar(1.0, -w * t.delay);
        h[static_cast<size_t>(b)] = acc;
    }
    return h;
}

double notch_depth_db(const std::vector<Tap>& taps, const ModemConfig& cfg) {
    const CVec h = frequency_response(taps, cfg);
    double lo = 1e300, hi = 0.0;
    for (const cplx& v : h) {
        const double m = std::abs(v);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    if (lo <= 0.0) return 300.0;
    return 20.0 * std::log10(hi / lo);
}

Vec shaped_noise(size_t len, const NoiseProfile& profile, uint32_t seed) {
    if (len == 0) return {};
    const Vec taps = shaping_taps(profile);
    std::mt19937 rng(mix_seed(seed, 0x17));
    const Vec white = white_noise(len + taps.size(), rng);
    const Vec full = dsp::convolve(white, taps);
    const double scale = std::pow(10.0, profile.level_offset_db / 20.0);
    Vec out(len);
    const size_t off = taps.size() / 2;
    for (size_t i = 0; i < len; ++i) out[i] = scale * full[off + i];
    return out;
}

Vec apply_channel(const Vec& x, const ChannelModel& m) {
    check_taps(m.taps);
    Vec y = multipath(x, m.taps);
    if (m.doppler_hz != 0.0) {
        y = dsp::resample(y, doppler_factor(m.doppler_hz));
    }
    if (!std::isfinite(m.snr_db)) return y;

    const Vec noise = m.noise_wav.empty()
                          ? shaped_noise(y.size(), m.noise, m.seed)
                          : looped_wav_noise(m.noise_wav, y.size(), m.seed);
    const auto [first, last] = active_span(y);
    double sigma = 0.0;
    if (last > first) {
        const double es = band_energy_over(y, first, last);
        const double en = band_energy_over(noise, first, last);
        if (en > 0.0 && es > 0.0) {
            sigma = std::sqrt(es / (en * std::pow(10.0, m.snr_db / 10.0)));
        }
    }
    for (size_t i = 0; i < y.size(); ++i) y[i] += sigma * noise[i];
    return y;
}

std::pair<ChannelModel, ChannelModel> make_nonreciprocal_pair(const ChannelModel& base,
                                                              const MultipathParams& params,
                                                              uint32_t seed) {
    ChannelModel fwd = base;
    ChannelModel bwd = base;
    fwd.seed = mix_seed(seed, 1);  // receiver noise is independent per direction
    bwd.seed = mix_seed(seed, 2);
    if (!base.reciprocal) {
        fwd.taps = draw_taps(params, mix_seed(seed, 3));
        bwd.taps = draw_taps(params, mix_seed(seed, 4));
    }
    return {fwd, bwd};
}

TimeVaryingChannel::TimeVaryingChannel(const ChannelModel& model, double rate_hz, double depth)
    : model_(model),
      rate_hz_(rate_hz),
      depth_(depth),
      base_taps_(model.taps),
      taps_(model.taps),
      wobble_(model.taps.size(), 0.0),
      rng_(mix_seed(model.seed, 0x7A)) {
    check_taps(base_taps_);
    if (rate_hz < 0.0) throw std::invalid_argument("negative variation rate");
}

void TimeVaryingChannel::evolve(size_t n_samples) {
    if (rate_hz_ <= 0.0 || n_samples == 0) return;
    const double dt = static_cast<double>(n_samples) / kRate;
    const double theta = 2.0 * kPi * rate_hz_;
    const double decay = std::exp(-theta * dt);
    const double diffuse = depth_ * std::sqrt(1.0 - decay * decay);
    std::normal_distribution<double> g(0.0, 1.0);
    for (size_t i = 0; i < wobble_.size(); ++i) {
        wobble_[i] = wobble_[i] * decay + diffuse * g(rng_);
        taps_[i].gain = base_taps_[i].gain * (1.0 + wobble_[i]);
    }
}

Vec TimeVaryingChannel::process(const Vec& x) {
    const size_t hist_need = static_cast<size_t>(std::ceil(max_tap_delay(base_taps_))) + 3;
    Vec ext;
    ext.reserve(history_.size() + x.size());
    ext.insert(ext.end(), history_.begin(), history_.end());
    ext.insert(ext.end(), x.begin(), x.end());
    const double base = static_cast<double>(history_.size());

    Vec y;
    y.reserve(x.size());
    for (size_t t0 = 0; t0 < x.size(); t0 += kEvolveBlock) {
        const size_t n = std::min(kEvolveBlock, x.size() - t0);
        evolve(n);
        const Vec block = tap_convolve(ext, base + static_cast<double>(t0), n, taps_);
        y.insert(y.end(), block.begin(), block.end());
    }
    if (ext.size() > hist_need) {
        history_.assign(ext.end() - static_cast<long>(hist_need), ext.end());
    } else {
        history_ = ext;
    }
    if (model_.doppler_hz != 0.0) {
        return resample_push(resample_hist_, resample_next_, y, doppler_factor(model_.doppler_hz));
    }
    return y;
}

CVec TimeVaryingChannel::band_response(const ModemConfig& cfg) const {
    return frequency_response(taps_, cfg);
}

StreamingChannel::StreamingChannel(const ChannelModel& model, const Vec& reference_tx)
    : model_(model), rng_(mix_seed(model.seed, 0x33)) {
    check_taps(model_.taps);
    if (model_.noise_wav.empty()) {
        shape_taps_ = shaping_taps(model_.noise);
        white_tail_.assign(shape_taps_.size() - 1, 0.0);
    } else {
        const SampleBuffer buf = read_wav(model_.noise_wav);
        if (buf.samples.empty()) throw std::runtime_error("empty noise recording");
        noise_src_ = buf.samples;
        noise_src_pos_ = static_cast<size_t>(mix_seed(model.seed, 0xA0)) % noise_src_.size();
    }
    if (std::isfinite(model_.snr_db)) {
        if (reference_tx.empty()) {
            throw std::invalid_argument("noise calibration needs a reference signal");
        }
        Vec y = multipath(reference_tx, model_.taps);
        if (model_.doppler_hz != 0.0) y = dsp::resample(y, doppler_factor(model_.doppler_hz));
        const Vec probe = model_.noise_wav.empty()
                              ? shaped_noise(y.size(), model_.noise, model_.seed)
                              : looped_wav_noise(model_.noise_wav, y.size(), model_.seed);
        const auto [first, last] = active_span(y);
        if (last > first) {
            const double es = band_energy_over(y, first, last);
            const double en = band_energy_over(probe, first, last);
            if (en > 0.0 && es > 0.0) {
                noise_sigma_ = std::sqrt(es / (en * std::pow(10.0, model_.snr_db / 10.0)));
            }
        }
    }
}

Vec StreamingChannel::push(const Vec& x) {
    const size_t hist_need = static_cast<size_t>(std::ceil(max_tap_delay(model_.taps))) + 3;
    Vec ext;
    ext.reserve(history_.size() + x.size());
    ext.insert(ext.end(), history_.begin(), history_.end());
    ext.insert(ext.end(), x.begin(), x.end());
    Vec y = tap_convolve(ext, static_cast<double>(history_.size()), x.size(), model_.taps);
    if (ext.size() > hist_need) {
        history_.assign(ext.end() - static_cast<long>(hist_need), ext.end());
    } else {
        history_ = ext;
    }
    if (model_.doppler_hz != 0.0) {
        y = resample_push(resample_hist_, resample_next_, y, doppler_factor(model_.doppler_hz));
    }
    if (noise_sigma_ > 0.0 && !y.empty()) {
        if (!noise_src_.empty()) {
            for (double& v : y) {
                v += noise_sigma_ * noise_src_[noise_src_pos_];
                noise_src_pos_ = (noise_src_pos_ + 1) % noise_src_.size();
            }
        } else {
            const double scale =
                noise_sigma_ * std::pow(10.0, model_.noise.level_offset_db / 20.0);
            Vec white(y.size());
            for (double& v : white) v = gauss_(rng_);
            const Vec full = dsp::convolve(white, shape_taps_);
            // Overlap-add with the previous chunk's convolution tail so the
            // noise stream is identical no matter how pushes are sliced.
            Vec shaped(y.size());
            for (size_t i = 0; i < y.size(); ++i) {
                double v = full[i];
                if (i < white_tail_.size()) v += white_tail_[i];
                shaped[i] = v;
            }
            // Save the tail that spills past this chunk, including leftover
            // tail from earlier chunks that still reaches beyond it.
            Vec new_tail(shape_taps_.size() - 1, 0.0);
            for (size_t i = 0; i < new_tail.size(); ++i) {
                double v = full[y.size() + i];
                const size_t old_idx = y.size() + i;
                if (old_idx < white_tail_.size()) v += white_tail_[old_idx];
                new_tail[i] = v;
            }
            white_tail_ = std::move(new_tail);
            for (size_t i = 0; i < y.size(); ++i) y[i] += scale * shaped[i];
        }
    }
    return y;
}

ChannelModel load_channel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open channel config: " + path);
    nlohmann::json j;
    in >> j;
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1) {
        throw std::runtime_error("unsupported channel config schema");
    }
    ChannelModel m;
    m.taps.clear();
    for (const auto& t : j.at("taps")) {
        m.taps.push_back({t.at("delay").get<double>(), t.at("gain").get<double>()});
    }
    if (j.contains("noise")) {
        const auto& n = j["noise"];
        m.noise.freq_hz = n.at("freq_hz").get<std::vector<double>>();
        m.noise.level_db = n.at("level_db").get<std::vector<double>>();
        m.noise.level_offset_db = n.value("offset_db", 0.0);
    }
    if (j.contains("snr_db")) {
        m.snr_db = j["snr_db"].get<double>();
    } else {
        m.snr_db = std::numeric_limits<double>::infinity();
    }
    m.doppler_hz = j.value("doppler_hz", 0.0);
    m.reciprocal = j.value("reciprocal", true);
    m.seed = j.value("seed", 1u);
    m.noise_wav = j.value("noise_wav", std::string{});
    check_taps(m.taps);
    return m;
}

void save_channel(const ChannelModel& m, const std::string& path) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["taps"] = nlohmann::json::array();
    for (const Tap& t : m.taps) {
        j["taps"].push_back({{"delay", t.delay}, {"gain", t.gain}});
    }
    j["noise"] = {{"freq_hz", m.noise.freq_hz},
                  {"level_db", m.noise.level_db},
                  {"offset_db", m.noise.level_offset_db}};
    if (std::isfinite(m.snr_db)) j["snr_db"] = m.snr_db;
    j["doppler_hz"] = m.doppler_hz;
    j["reciprocal"] = m.reciprocal;
    j["seed"] = m.seed;
    if (!m.noise_wav.empty()) j["noise_wav"] = m.noise_wav;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write channel config: " + path);
    out << j.dump(2) << "\n";
}

std::vector<Tap> taps_from_impulse_response(const Vec& ir, int max_taps, double threshold_rel) {
    if (ir.empty()) throw std::invalid_argument("empty impulse response");
    double peak = 0.0;
    for (double v : ir) peak = std::max(peak, std::abs(v));
    if (peak <= 0.0) throw std::invalid_argument("all-zero impulse response");
    std::vector<size_t> cand;
    for (size_t i = 0; i < ir.size(); ++i) {
        const double a = std::abs(ir[i]);
        if (a < threshold_rel * peak) continue;
        const double prev = i > 0 ? std::abs(ir[i - 1]) : 0.0;
        const double next = i + 1 < ir.size() ? std::abs(ir[i + 1]) : 0.0;
        if (a >= prev && a >= next) cand.push_back(i);
    }
    std::sort(cand.begin(), cand.end(), [&](size_t a, size_t b) {
        return std::abs(ir[a]) > std::abs(ir[b]);
    });
    if (cand.size() > static_cast<size_t>(max_taps)) cand.resize(static_cast<size_t>(max_taps));
    std::sort(cand.begin(), cand.end());
    std::vector<Tap> taps;
    const size_t origin = cand.front();
    for (size_t i : cand) {
        taps.push_back({static_cast<double>(i - origin), ir[i] / peak});
    }
    return taps;
}

}  // namespace uwm::chan
