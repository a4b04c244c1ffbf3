// dsp.cpp - FFT (FFTW-backed), FIR design, correlation, Goertzel, resampling
#include "uwm/dsp.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>

namespace uwm::dsp {

namespace {

constexpr double kPi = 3.14159265358979323846;

// One cached FFTW plan per (size, direction). FFTW plan creation is not
// thread-safe and the cached buffers are shared, so the whole transform is
// guarded; callers see a pure function.
struct PlanCache {
    std::mutex mu;
    std::map<std::pair<size_t, int>, fftw_plan> plans;
    std::map<size_t, fftw_complex*> in_buf, out_buf;

    fftw_complex* buffer(std::map<size_t, fftw_complex*>& m, size_t n) {
        auto it = m.find(n);
        if (it != m.end()) return it->second;
        fftw_complex* p = fftw_alloc_complex(n);
        m[n] = p;
        return p;
    }

    void execute(const cplx* in, cplx* out, size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mu);
        fftw_complex* ib = buffer(in_buf, n);
        fftw_complex* ob = buffer(out_buf, n);
        auto key = std::make_pair(n, sign);
        auto it = plans.find(key);
        if (it == plans.end()) {
            fftw_plan p = fftw_plan_dft_1d((int)n, ib, ob, sign, FFTW_ESTIMATE);
            it = plans.emplace(key, p).first;
        }
        std::memcpy(ib, in, n * sizeof(fftw_complex));
        fftw_execute(it->second);
        std::memcpy(out, ob, n * sizeof(fftw_complex));
    }
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

CVec fft(const CVec& x) {
    if (x.empty()) throw std::invalid_argument("fft: empty input");
    CVec out(x.size());
    cache().execute(x.data(), out.data(), x.size(), FFTW_FORWARD);
    return out;
}

CVec fft(const Vec& x) {
    CVec cx(x.size());
    for (size_t i = 0; i < x.size(); ++i) cx[i] = cplx(x[i], 0.0);
    return fft(cx);
}

CVec ifft(const CVec& x) {
    if (x.empty()) throw std::invalid_argument("ifft: empty input");
    CVec out(x.size());
    cache().execute(x.data(), out.data(), x.size(), FFTW_BACKWARD);
    const double s = 1.0 / (double)x.size();
    for (auto& v : out) v *= s;
    return out;
}

Vec ifft_real(const CVec& x) {
    CVec t = ifft(x);
    Vec out(t.size());
    for (size_t i = 0; i < t.size(); ++i) out[i] = t[i].real();
    return out;
}

Vec symbol_from_band_bins(const CVec& vals, int first_bin, int fft_size) {
    if (first_bin < 1 || first_bin + (int)vals.size() > fft_size / 2)
        throw std::invalid_argument("symbol_from_band_bins: bins outside (0, Nyquist)");
    CVec X(fft_size, cplx(0.0, 0.0));
    for (size_t i = 0; i < vals.size(); ++i) {
        int k = first_bin + (int)i;
        X[k] = vals[i];
        X[fft_size - k] = std::conj(vals[i]);
    }
    return ifft_real(X);
}

CVec band_bins_from_segment(const Vec& seg, size_t begin, int fft_size, int first_bin, int count) {
    if (begin + (size_t)fft_size > seg.size())
        throw std::out_of_range("band_bins_from_segment: frame exceeds segment");
    if (first_bin < 1 || first_bin + count > fft_size / 2)
        throw std::invalid_argument("band_bins_from_segment: bins outside (0, Nyquist)");
    CVec frame(fft_size);
    for (int i = 0; i < fft_size; ++i) frame[i] = cplx(seg[begin + i], 0.0);
    CVec X = fft(frame);
    return CVec(X.begin() + first_bin, X.begin() + first_bin + count);
}

Vec design_bandpass(int order, double low_hz, double high_hz, double rate) {
    if (order < 2 || low_hz <= 0 || high_hz <= low_hz || high_hz >= rate / 2)
        throw std::invalid_argument("design_bandpass: invalid band edges or order");
    const int n = order + 1;
    // Hamming transition width; pull the ideal cutoffs inward so the
    // requested edges sit deep in the transition and the -40 dB floor is
    // reached ~500 Hz outside the band at the default order.
    const double transition = 3.3 / n * rate;
    const double shift = 0.065 * transition;
    const double fl = (low_hz + shift) / rate;
    const double fh = (high_hz - shift) / rate;
    if (fh <= fl) throw std::invalid_argument("design_bandpass: band too narrow for order");
    Vec h(n);
    const double m = order / 2.0;
    for (int i = 0; i < n; ++i) {
        const double x = i - m;
        auto sinc = [](double v) { return v == 0.0 ? 1.0 : std::sin(kPi * v) / (kPi * v); };
        const double lp_h = 2.0 * fh * sinc(2.0 * fh * x);
        const double lp_l = 2.0 * fl * sinc(2.0 * fl * x);
        const double w = 0.54 - 0.46 * std::cos(2.0 * kPi * i / order);
        h[i] = (lp_h - lp_l) * w;
    }
    return h;
}

double fir_gain_db(const Vec& taps, double freq_hz, double rate) {
    cplx acc(0.0, 0.0);
    for (size_t i = 0; i < taps.size(); ++i)
        acc += taps[i] * std::exp(cplx(0.0, -2.0 * kPi * freq_hz / rate * (double)i));
    return 20.0 * std::log10(std::abs(acc) + 1e-300);
}

Vec convolve(const Vec& a, const Vec& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("convolve: empty input");
    const size_t out_len = a.size() + b.size() - 1;
    const size_t n = next_pow2(out_len);
    CVec fa(n, cplx(0, 0)), fb(n, cplx(0, 0));
    for (size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
    for (size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
    fa = fft(fa);
    fb = fft(fb);
    for (size_t i = 0; i < n; ++i) fa[i] *= fb[i];
    CVec prod = ifft(fa);
    Vec out(out_len);
    for (size_t i = 0; i < out_len; ++i) out[i] = prod[i].real();
    return out;
}

Vec filter_aligned(const Vec& x, const Vec& taps) {
    Vec full = convolve(x, taps);
    const size_t delay = taps.size() / 2;
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = full[i + delay];
    return out;
}

Vec cross_correlate(const Vec& stream, const Vec& tmpl) {
    if (stream.empty() || tmpl.empty()) throw std::invalid_argument("cross_correlate: empty input");
    if (tmpl.size() > stream.size())
        throw std::invalid_argument("cross_correlate: template longer than stream");
    // correlation = convolution with the reversed template
    Vec rev(tmpl.rbegin(), tmpl.rend());
    Vec full = convolve(stream, rev);
    const size_t n_out = stream.size() - tmpl.size() + 1;
    Vec out(n_out);
    for (size_t i = 0; i < n_out; ++i) out[i] = full[i + tmpl.size() - 1];
    return out;
}

Vec normalized_cross_correlate(const Vec& stream, const Vec& tmpl) {
    Vec raw = cross_correlate(stream, tmpl);
    double te = 0.0;
    for (double v : tmpl) te += v * v;
    const double tn = std::sqrt(te);
    Vec pe = energy_prefix(stream);
    for (size_t i = 0; i < raw.size(); ++i) {
        const double we = pe[i + tmpl.size()] - pe[i];
        raw[i] = (we > 0 && tn > 0) ? raw[i] / (tn * std::sqrt(we)) : 0.0;
    }
    return raw;
}

double goertzel_power(const Vec& x, size_t begin, size_t len, double freq_hz, double rate) {
    if (begin + len > x.size()) throw std::out_of_range("goertzel_power: window out of range");
    const double w = 2.0 * kPi * freq_hz / rate;
    const double coeff = 2.0 * std::cos(w);
    double s0 = 0, s1 = 0, s2 = 0;
    for (size_t i = 0; i < len; ++i) {
        s0 = x[begin + i] + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    return s1 * s1 + s2 * s2 - coeff * s1 * s2;
}

Vec resample(const Vec& x, double factor) {
    if (x.size() < 4 || factor <= 0) throw std::invalid_argument("resample: bad input");
    const size_t out_len = (size_t)std::floor((double)(x.size() - 1) / factor) + 1;
    Vec out(out_len);
    const int last = (int)x.size() - 1;
    for (size_t n = 0; n < out_len; ++n) {
        const double p = n * factor;
        int i = (int)std::floor(p);
        const double f = p - i;
        auto at = [&](int idx) {
            if (idx < 0) idx = 0;
            if (idx > last) idx = last;
            return x[idx];
        };
        // 4-point cubic Lagrange on x[i-1..i+2]
        const double xm1 = at(i - 1), x0 = at(i), x1 = at(i + 1), x2 = at(i + 2);
        const double wm1 = -f * (f - 1.0) * (f - 2.0) / 6.0;
        const double w0 = (f * f - 1.0) * (f - 2.0) / 2.0;
        const double w1 = -f * (f + 1.0) * (f - 2.0) / 2.0;
        const double w2 = f * (f * f - 1.0) / 6.0;
        out[n] = wm1 * xm1 + w0 * x0 + w1 * x1 + w2 * x2;
    }
    return out;
}

Vec energy_prefix(const Vec& x) {
    Vec p(x.size() + 1, 0.0);
    for (size_t i = 0; i < x.size(); ++i) p[i + 1] = p[i] + x[i] * x[i];
    return p;
}

}  // namespace uwm::dsp
