// test_dsp.cpp - transforms, filter design, correlation, Goertzel, resampling
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "uwm/config.hpp"
#include "uwm/dsp.hpp"

using namespace uwm;

namespace {
constexpr double kPi = 3.14159265358979323846;

Vec random_vec(size_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Vec v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

double rms(const Vec& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s / v.size());
}
}  // namespace

TEST_CASE("fft/ifft roundtrip identity at all symbol sizes") {
    for (size_t n : {960u, 1920u, 4800u, 1000u}) {
        Vec x = random_vec(n, 42 + n);
        CVec cx(n);
        for (size_t i = 0; i < n; ++i) cx[i] = cplx(x[i], 0.0);
        CVec back = dsp::ifft(dsp::fft(cx));
        double err = 0;
        for (size_t i = 0; i < n; ++i) err += std::norm(back[i] - cx[i]);
        CHECK(std::sqrt(err / n) < 1e-9);
    }
}

TEST_CASE("fft of impulse is flat unit magnitude") {
    Vec x(960, 0.0);
    x[0] = 1.0;
    CVec X = dsp::fft(x);
    for (const auto& v : X) CHECK(std::abs(v) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fft of a bin-centered sinusoid concentrates at +-k") {
    const int n = 960, k = 37;
    Vec x(n);
    for (int t = 0; t < n; ++t) x[t] = std::cos(2.0 * kPi * k * t / n);
    CVec X = dsp::fft(x);
    double in_bins = std::norm(X[k]) + std::norm(X[n - k]);
    double total = 0;
    for (const auto& v : X) total += std::norm(v);
    CHECK(in_bins / total > 1.0 - 1e-9);
}

TEST_CASE("fft is Parseval-consistent") {
    Vec x = random_vec(960, 7);
    CVec X = dsp::fft(x);
    double t_energy = 0, f_energy = 0;
    for (double v : x) t_energy += v * v;
    for (const auto& v : X) f_energy += std::norm(v);
    CHECK(f_energy / 960.0 == doctest::Approx(t_energy).epsilon(1e-9));
}

TEST_CASE("fft rejects empty input") {
    CHECK_THROWS(dsp::fft(CVec{}));
    CHECK_THROWS(dsp::ifft(CVec{}));
}

TEST_CASE("band-bin symbol build/extract roundtrip") {
    ModemConfig cfg;
    const int n0 = cfg.num_bins();
    CVec vals(n0);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (auto& v : vals) v = cplx(g(rng), g(rng));
    Vec sym = dsp::symbol_from_band_bins(vals, cfg.first_bin(), cfg.fft_size());
    CHECK((int)sym.size() == cfg.fft_size());
    CVec got = dsp::band_bins_from_segment(sym, 0, cfg.fft_size(), cfg.first_bin(), n0);
    for (int i = 0; i < n0; ++i) CHECK(std::abs(got[i] - vals[i]) < 1e-9);
}

TEST_CASE("bandpass: unity in midband, deep stop 500 Hz outside") {
    Vec h = dsp::design_bandpass(128, 1000.0, 4000.0, 48000.0);
    CHECK(h.size() == 129);
    CHECK(std::fabs(dsp::fir_gain_db(h, 2500.0, 48000.0)) < 1.0);
    CHECK(dsp::fir_gain_db(h, 500.0, 48000.0) < -40.0);
    CHECK(dsp::fir_gain_db(h, 4500.0, 48000.0) < -40.0);
}

TEST_CASE("bandpass kills DC") {
    Vec h = dsp::design_bandpass(128, 1000.0, 4000.0, 48000.0);
    Vec dc(4000, 1.0);
    Vec y = dsp::filter_aligned(dc, h);
    // after the transient the output settles to ~zero (window sidelobe floor)
    double tail = 0;
    for (size_t i = 1000; i < y.size() - 1000; ++i) tail = std::max(tail, std::fabs(y[i]));
    CHECK(tail < 5e-3);
}

TEST_CASE("bandpass energy never grows beyond ripple") {
    Vec h = dsp::design_bandpass(128, 1000.0, 4000.0, 48000.0);
    Vec x = random_vec(48000, 11);
    Vec y = dsp::convolve(x, h);
    double ex = 0, ey = 0;
    for (double v : x) ex += v * v;
    for (double v : y) ey += v * v;
    CHECK(ey <= ex * 1.26);  // +1 dB passband ripple allowance
}

TEST_CASE("bandpass rejects invalid edges") {
    CHECK_THROWS(dsp::design_bandpass(128, 4000.0, 1000.0, 48000.0));
    CHECK_THROWS(dsp::design_bandpass(128, -5.0, 4000.0, 48000.0));
    CHECK_THROWS(dsp::design_bandpass(128, 1000.0, 30000.0, 48000.0));
}

TEST_CASE("filter_aligned removes group delay for in-band tones") {
    Vec h = dsp::design_bandpass(128, 1000.0, 4000.0, 48000.0);
    const int n = 9600;
    Vec x(n);
    for (int t = 0; t < n; ++t) x[t] = std::sin(2.0 * kPi * 2500.0 * t / 48000.0);
    Vec y = dsp::filter_aligned(x, h);
    // compare away from edges: same phase, ~same amplitude
    double err = 0, ref = 0;
    for (int t = 500; t < n - 500; ++t) {
        err += (y[t] - x[t]) * (y[t] - x[t]);
        ref += x[t] * x[t];
    }
    CHECK(err / ref < 0.01);
}

TEST_CASE("cross-correlation: matched template peaks at its offset") {
    Vec tmpl = random_vec(500, 21);
    Vec stream(4000, 0.0);
    for (size_t i = 0; i < tmpl.size(); ++i) stream[1200 + i] = tmpl[i];
    Vec c = dsp::cross_correlate(stream, tmpl);
    size_t best = 0;
    for (size_t i = 1; i < c.size(); ++i)
        if (c[i] > c[best]) best = i;
    CHECK(best == 1200);

    SUBCASE("scaling the stream moves nothing") {
        Vec half(stream.size());
        for (size_t i = 0; i < stream.size(); ++i) half[i] = 0.5 * stream[i];
        Vec c2 = dsp::cross_correlate(half, tmpl);
        size_t best2 = 0;
        for (size_t i = 1; i < c2.size(); ++i)
            if (c2[i] > c2[best2]) best2 = i;
        CHECK(best2 == 1200);
    }

    SUBCASE("shifting the stream shifts the argmax") {
        Vec shifted(stream.size() + 700, 0.0);
        for (size_t i = 0; i < stream.size(); ++i) shifted[i + 700] = stream[i];
        Vec c3 = dsp::cross_correlate(shifted, tmpl);
        size_t best3 = 0;
        for (size_t i = 1; i < c3.size(); ++i)
            if (c3[i] > c3[best3]) best3 = i;
        CHECK(best3 == 1900);
    }
}

TEST_CASE("normalized correlation of noise stays far below the matched peak") {
    Vec tmpl = random_vec(960, 33);
    double worst = 0;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Vec noise = random_vec(20000, 1000 + seed);
        Vec c = dsp::normalized_cross_correlate(noise, tmpl);
        for (double v : c) worst = std::max(worst, std::fabs(v));
    }
    // matched case gives exactly 1.0; unrelated noise stays well under it
    CHECK(worst < 0.35);
    Vec stream(4000, 0.0);
    for (size_t i = 0; i < tmpl.size(); ++i) stream[100 + i] = tmpl[i];
    Vec cm = dsp::normalized_cross_correlate(stream, tmpl);
    CHECK(cm[100] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cross_correlate rejects empty and oversized templates") {
    CHECK_THROWS(dsp::cross_correlate(Vec{}, Vec{1.0}));
    CHECK_THROWS(dsp::cross_correlate(Vec{1.0}, Vec{}));
    CHECK_THROWS(dsp::cross_correlate(Vec{1.0, 2.0}, Vec{1.0, 2.0, 3.0}));
}

TEST_CASE("Goertzel power matches the FFT bin") {
    const int n = 960;
    Vec x(n);
    for (int t = 0; t < n; ++t) x[t] = 0.7 * std::cos(2.0 * kPi * 1500.0 * t / 48000.0);
    double g = dsp::goertzel_power(x, 0, n, 1500.0, 48000.0);
    CVec X = dsp::fft(x);
    CHECK(g == doctest::Approx(std::norm(X[30])).epsilon(1e-6));
}

TEST_CASE("resampling stretches the time base") {
    const int n = 9600;
    Vec x(n);
    for (int t = 0; t < n; ++t) x[t] = std::sin(2.0 * kPi * 2000.0 * t / 48000.0);

    SUBCASE("factor 1 is the identity") {
        Vec y = dsp::resample(x, 1.0);
        double err = 0;
        for (size_t i = 0; i < y.size(); ++i) err += (y[i] - x[i]) * (y[i] - x[i]);
        CHECK(err / n < 1e-18);
    }

    SUBCASE("factor 1.002 shifts a 2 kHz tone by 4 Hz") {
        Vec y = dsp::resample(x, 1.002);
        // measure apparent frequency via Goertzel peak comparison
        double p_shift = dsp::goertzel_power(y, 0, 4800, 2004.0, 48000.0);
        double p_orig = dsp::goertzel_power(y, 0, 4800, 2000.0, 48000.0);
        CHECK(p_shift > p_orig);
    }
}

TEST_CASE("energy prefix gives O(1) window energies") {
    Vec x = random_vec(1000, 5);
    Vec p = dsp::energy_prefix(x);
    double direct = 0;
    for (int i = 100; i < 300; ++i) direct += x[i] * x[i];
    CHECK(p[300] - p[100] == doctest::Approx(direct).epsilon(1e-12));
}
