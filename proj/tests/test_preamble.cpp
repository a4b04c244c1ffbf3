// test_preamble.cpp - preamble construction and two-stage detection
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "uwm/dsp.hpp"
#include "uwm/preamble.hpp"

using namespace uwm;

namespace {

Vec white_noise(size_t n, double sigma, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sigma);
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

TEST_CASE("preamble is 8 bare symbols: 7680 samples at default config") {
    ModemConfig cfg;
    pre::PreambleSpec spec;
    Vec p = pre::build_preamble(spec, cfg);
    CHECK(p.size() == 7680);
    double peak = 0;
    for (double v : p) peak = std::max(peak, std::fabs(v));
    CHECK(peak == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("CAZAC bins have constant amplitude and near-zero autocorrelation") {
    CVec zc = pre::cazac_sequence(60, 1);
    for (const auto& v : zc) CHECK(std::abs(v) == doctest::Approx(1.0).epsilon(1e-12));
    // cyclic autocorrelation at nonzero lags vanishes
    for (int lag : {1, 7, 30}) {
        cplx acc(0, 0);
        for (int n = 0; n < 60; ++n) acc += zc[n] * std::conj(zc[(n + lag) % 60]);
        CHECK(std::abs(acc) / 60.0 < 1e-9);
    }
}

TEST_CASE("spectral energy stays inside 0.9-4.1 kHz") {
    ModemConfig cfg;
    Vec p = pre::build_preamble(pre::PreambleSpec{}, cfg);
    CVec X = dsp::fft(p);
    const double df = cfg.sample_rate / p.size();
    double in = 0, total = 0;
    for (size_t k = 0; k < X.size(); ++k) {
        double f = k * df;
        if (f > cfg.sample_rate / 2) f = cfg.sample_rate - f;
        const double e = std::norm(X[k]);
        total += e;
        if (f >= 900.0 && f <= 4100.0) in += e;
    }
    CHECK((total - in) / total < 0.01);
}

TEST_CASE("PN sign pattern: segments 0 and 6 negate segment 1") {
    ModemConfig cfg;
    Vec p = pre::build_preamble(pre::PreambleSpec{}, cfg);
    const int n = cfg.fft_size();
    for (int t = 0; t < n; ++t) {
        CHECK(p[t] == doctest::Approx(-p[n + t]).epsilon(1e-12));
        CHECK(p[6 * n + t] == doctest::Approx(-p[n + t]).epsilon(1e-12));
    }
}

TEST_CASE("band outside Nyquist is rejected") {
    ModemConfig cfg;
    cfg.band_high_hz = 30000.0;
    CHECK_THROWS(pre::build_preamble(pre::PreambleSpec{}, cfg));
}

TEST_CASE("coarse detection finds a clean embedded preamble") {
    ModemConfig cfg;
    Vec p = pre::build_preamble(pre::PreambleSpec{}, cfg);
    Vec stream(20000, 0.0);
    for (size_t i = 0; i < p.size(); ++i) stream[5000 + i] = p[i];
    auto cands = pre::coarse_detect(stream, p);
    REQUIRE(!cands.empty());
    bool near = false;
    for (size_t c : cands) near = near || ((c > 4984) && (c < 5016));
    CHECK(near);
}

TEST_CASE("coarse detection on an all-zero stream is empty") {
    ModemConfig cfg;
    Vec p = pre::build_preamble(pre::PreambleSpec{}, cfg);
    Vec zeros(20000, 0.0);
    CHECK(pre::coarse_detect(zeros, p).empty());
}

TEST_CASE("sliding metric: clean preamble scores 7/8, noise stays low") {
    ModemConfig cfg;
    pre::PreambleSpec spec;
    Vec p = pre::build_preamble(spec, cfg);
    Vec stream(12000, 0.0);
    for (size_t i = 0; i < p.size(); ++i) stream[2000 + i] = p[i];
    CHECK(pre::sliding_metric(stream, 2000, spec, cfg) == doctest::Approx(0.875).epsilon(1e-9));
    CHECK(pre::sliding_metric(stream, 2000, spec, cfg) > 0.6);

    for (uint64_t seed = 0; seed < 10; ++seed) {
        Vec noise = white_noise(9000, 1.0, 77 + seed);
        CHECK(pre::sliding_metric(noise, 100, spec, cfg) < 0.2);
    }
}

TEST_CASE("sliding metric is exactly scale-invariant") {
    ModemConfig cfg;
    pre::PreambleSpec spec;
    Vec p = pre::build_preamble(spec, cfg);
    Vec stream(10000, 0.0);
    for (size_t i = 0; i < p.size(); ++i) stream[500 + i] = p[i];
    double m1 = pre::sliding_metric(stream, 500, spec, cfg);
    for (auto& v : stream) v *= 0.05;
    double m2 = pre::sliding_metric(stream, 500, spec, cfg);
    CHECK(std::fabs(m1 - m2) < 1e-6);
}

TEST_CASE("prefix-sum scan equals the direct metric") {
    ModemConfig cfg;
    pre::PreambleSpec spec;
    Vec p = pre::build_preamble(spec, cfg);
    Vec stream = white_noise(20000, 0.3, 5);
    for (size_t i = 0; i < p.size(); ++i) stream[4000 + i] += p[i];
    Vec scan = pre::sliding_metric_scan(stream, 3000, 6000, 7, spec, cfg);
    for (size_t idx = 0; idx < scan.size(); ++idx) {
        const size_t off = 3000 + idx * 7;
        if (off + 7680 > stream.size()) break;
        CHECK(scan[idx] == doctest::Approx(pre::sliding_metric(stream, off, spec, cfg))
                               .epsilon(1e-9));
    }
}

TEST_CASE("detect_and_sync recovers the offset within the step bound") {
    ModemConfig cfg;
    pre::PreambleSpec spec;
    Vec p = pre::build_preamble(spec, cfg);
    std::mt19937_64 rng(11);
    const double sigma = rms(p);  // 0 dB wideband, ~9 dB in-band
    int hits = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const size_t true_off = 3000 + (rng() % 30000);
        Vec stream = white_noise(50000, sigma, 900 + trial);
        for (size_t i = 0; i < p.size(); ++i) stream[true_off + i] += p[i];
        auto r = pre::detect_and_sync(stream, spec, cfg);
        if (r && std::llabs((long long)r->sample_index - (long long)true_off) <= 8) ++hits;
    }
    CHECK(hits >= 19);
}

TEST_CASE("impulsive spikes trip the coarse stage but not the final decision") {
    ModemConfig cfg;
    pre::PreambleSpec spec;
    Vec p = pre::build_preamble(spec, cfg);
    Vec stream = white_noise(40000, 0.01, 4242);
    std::mt19937_64 rng(17);
    for (int k = 0; k < 25; ++k) stream[1000 + (rng() % 38000)] += 5.0;  // bubbles
    CHECK(!pre::detect_and_sync(stream, spec, cfg).has_value());
}

TEST_CASE("pure noise never clears the detection threshold") {
    ModemConfig cfg;
    pre::PreambleSpec spec;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Vec noise = white_noise(60000, 1.0, 31337 + seed);
        CHECK(!pre::detect_and_sync(noise, spec, cfg).has_value());
    }
}

TEST_CASE("detection is deterministic") {
    ModemConfig cfg;
    pre::PreambleSpec spec;
    Vec p = pre::build_preamble(spec, cfg);
    Vec stream = white_noise(30000, rms(p), 321);
    for (size_t i = 0; i < p.size(); ++i) stream[9000 + i] += p[i];
    auto a = pre::detect_and_sync(stream, spec, cfg);
    auto b = pre::detect_and_sync(stream, spec, cfg);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(a->sample_index == b->sample_index);
    CHECK(a->peak_value == b->peak_value);
}
