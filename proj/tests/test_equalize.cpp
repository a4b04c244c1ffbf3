// test_equalize.cpp - least-squares equalizer behavior
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "uwm/dsp.hpp"
#include "uwm/equalize.hpp"

using namespace uwm;

namespace {

// Band-limited test signal: white noise pushed through the transmit band
// filter, so it resembles what the equalizer actually sees.
Vec bandlimited_noise(size_t len, uint32_t seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Vec x(len);
    for (double& v : x) v = g(rng);
    const Vec taps = dsp::design_bandpass(128, 1000.0, 4000.0, 48000.0);
    return dsp::filter_aligned(x, taps);
}

Vec apply_echo(const Vec& x, size_t delay, double gain) {
    Vec y = x;
    for (size_t t = delay; t < x.size(); ++t) y[t] += gain * x[t - delay];
    return y;
}

}  // namespace

TEST_CASE("identity channel is equalized to numerical silence") {
    const Vec x = bandlimited_noise(1400, 1);
    const Vec ref(x.begin(), x.begin() + 1027);
    eq::EqualizerConfig ec;
    const Vec g = eq::train_equalizer(x, 0, ref, ec);
    REQUIRE(g.size() == 480);
    const Vec out = eq::apply_equalizer(x, 0, ref.size(), g, ec.delay);
    CHECK(eq::residual_db(out, ref) < -60.0);
}

TEST_CASE("pure delays within the filter span are absorbed") {
    const Vec x = bandlimited_noise(3000, 2);
    eq::EqualizerConfig ec;

    // Channel delays the signal by 30 samples.
    Vec delayed(x.size(), 0.0);
    for (size_t t = 30; t < x.size(); ++t) delayed[t] = x[t - 30];
    Vec ref(x.begin() + 500, x.begin() + 500 + 1027);
    Vec g = eq::train_equalizer(delayed, 500, ref, ec);
    Vec out = eq::apply_equalizer(delayed, 500, ref.size(), g, ec.delay);
    CHECK(eq::residual_db(out, ref) < -50.0);

    // Channel advances the signal by 20 samples (receiver synchronized late).
    Vec advanced(x.size(), 0.0);
    for (size_t t = 0; t + 20 < x.size(); ++t) advanced[t] = x[t + 20];
    g = eq::train_equalizer(advanced, 500, ref, ec);
    out = eq::apply_equalizer(advanced, 500, ref.size(), g, ec.delay);
    CHECK(eq::residual_db(out, ref) < -50.0);
}

TEST_CASE("strong echo beyond the cyclic prefix is suppressed on held-out data") {
    const Vec x = bandlimited_noise(4000, 3);
    const Vec y = apply_echo(x, 120, 0.5);
    eq::EqualizerConfig ec;
    const Vec ref(x.begin() + 300, x.begin() + 300 + 1027);
    const Vec g = eq::train_equalizer(y, 300, ref, ec);

    // Apply to a later stretch the fit never saw.
    const Vec hold(x.begin() + 1500, x.begin() + 3500);
    const Vec out = eq::apply_equalizer(y, 1500, hold.size(), g, ec.delay);
    CHECK(eq::residual_db(out, hold) < -20.0);
}

TEST_CASE("longer echo is reduced down to the truncation floor") {
    // The ideal inverse of (1 + 0.6 z^-150) needs taps at delay + 150k; with
    // 480 taps and a 64-sample delay only three fit, so the series truncates
    // at 0.6^3 and the held-out residual floors near -13 dB.
    const Vec x = bandlimited_noise(4000, 4);
    const Vec y = apply_echo(x, 150, 0.6);
    eq::EqualizerConfig ec;
    const Vec ref(x.begin() + 300, x.begin() + 300 + 1027);
    const Vec g = eq::train_equalizer(y, 300, ref, ec);
    const Vec hold(x.begin() + 1500, x.begin() + 3500);
    const Vec out = eq::apply_equalizer(y, 1500, hold.size(), g, ec.delay);
    CHECK(eq::residual_db(out, hold) < -12.5);
}

TEST_CASE("noise does not destabilize the fit") {
    const Vec x = bandlimited_noise(4000, 5);
    double pwr = 0.0;
    for (double v : x) pwr += v * v;
    pwr /= static_cast<double>(x.size());
    std::mt19937 rng(6);
    std::normal_distribution<double> g_n(0.0, std::sqrt(pwr) * 0.1);  // 20 dB down
    Vec y = x;
    for (double& v : y) v += g_n(rng);

    eq::EqualizerConfig ec;
    const Vec ref(x.begin() + 300, x.begin() + 300 + 1027);
    const Vec g = eq::train_equalizer(y, 300, ref, ec);
    double norm = 0.0;
    for (double v : g) norm += v * v;
    CHECK(norm < 10.0);  // no runaway noise amplification
    const Vec hold(x.begin() + 1500, x.begin() + 3500);
    const Vec out = eq::apply_equalizer(y, 1500, hold.size(), g, ec.delay);
    CHECK(eq::residual_db(out, hold) < -15.0);
}

TEST_CASE("input validation") {
    const Vec x(100, 0.5);
    eq::EqualizerConfig ec;
    CHECK_THROWS(eq::train_equalizer(x, 200, x, ec));
    CHECK_THROWS(eq::train_equalizer(x, 0, Vec{}, ec));
    eq::EqualizerConfig bad;
    bad.length = 0;
    CHECK_THROWS(eq::train_equalizer(x, 0, x, bad));
    CHECK_THROWS(eq::apply_equalizer(x, 0, 10, Vec{}, 0));
    CHECK_THROWS(eq::residual_db(Vec{1.0}, Vec{1.0, 2.0}));
}
