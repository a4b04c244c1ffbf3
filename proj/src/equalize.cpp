// equalize.cpp - time-domain least-squares channel equalizer
#include "uwm/equalize.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "uwm/dsp.hpp"

namespace uwm::eq {
namespace {

double sample_or_zero(const Vec& x, long long idx) {
    if (idx < 0 || idx >= static_cast<long long>(x.size())) return 0.0;
    return x[static_cast<size_t>(idx)];
}

}  // namespace

Vec train_equalizer(const Vec& rx, size_t rx_begin, const Vec& ref, const EqualizerConfig& ec) {
    if (ec.length <= 0) throw std::invalid_argument("equalizer length must be positive");
    if (ref.empty()) throw std::invalid_argument("empty training reference");
    if (rx_begin >= rx.size()) throw std::out_of_range("training start outside received signal");
    const int L = ec.length;
    const long long T = static_cast<long long>(ref.size());
    const long long base = static_cast<long long>(rx_begin) + ec.delay;

    Eigen::MatrixXd A(T, L);
    for (long long t = 0; t < T; ++t) {
        for (int tau = 0; tau < L; ++tau) {
            A(t, tau) = sample_or_zero(rx, base + t - tau);
        }
    }
    Eigen::Map<const Eigen::VectorXd> d(ref.data(), T);

    Eigen::MatrixXd R = A.transpose() * A;
    Eigen::VectorXd p = A.transpose() * d;
    const double ridge = ec.diag_load + 1e-8 * R.trace() / static_cast<double>(L);
    R.diagonal().array() += ridge;

    Eigen::VectorXd g = R.ldlt().solve(p);
    return Vec(g.data(), g.data() + L);
}

Vec apply_equalizer(const Vec& rx, size_t rx_begin, size_t out_len, const Vec& g, int delay) {
    if (g.empty()) throw std::invalid_argument("empty equalizer");
    // out[t] = conv(rx, g)[rx_begin + t + delay]; run one fast convolution of
    // the spanned window rather than the quadratic direct sum.
    const long long lo = static_cast<long long>(rx_begin) + delay -
                         static_cast<long long>(g.size()) + 1;
    const long long hi = static_cast<long long>(rx_begin) + delay +
                         static_cast<long long>(out_len);  // exclusive
    Vec window(static_cast<size_t>(hi - lo));
    for (long long i = lo; i < hi; ++i) {
        window[static_cast<size_t>(i - lo)] = sample_or_zero(rx, i);
    }
    const Vec conv = dsp::convolve(window, g);
    Vec out(out_len);
    // conv[i] = sum_tau g[tau] window[i - tau]; rx index j maps to window
    // index j - lo, so the wanted sample conv_rx[rx_begin+t+delay] sits at
    // conv[rx_begin + t + delay - lo].
    const size_t off = static_cast<size_t>(static_cast<long long>(rx_begin) + delay - lo);
    for (size_t t = 0; t < out_len; ++t) {
        out[t] = conv[off + t];
    }
    return out;
}

double residual_db(const Vec& a, const Vec& b) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("length mismatch");
    double err = 0.0, refe = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        err += d * d;
        refe += b[i] * b[i];
    }
    if (refe <= 0.0) throw std::invalid_argument("zero reference energy");
    if (err <= 0.0) return -300.0;
    return 10.0 * std::log10(err / refe);
}

}  // namespace uwm::eq
