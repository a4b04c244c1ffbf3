// fec.cpp - tail-biting punctured convolutional code and exact-ML Viterbi
#include "uwm/fec.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace uwm::fec {

namespace {

constexpr unsigned kG1 = 0171;  // 1 + D + D^2 + D^3 + D^6
constexpr unsigned kG2 = 0133;  // 1 + D^2 + D^3 + D^5 + D^6
constexpr int kStates = 64;

inline int parity(unsigned v) { return __builtin_parity(v); }

// state holds the previous 6 info bits, most recent at bit 5
inline unsigned next_state(unsigned s, unsigned b) { return ((s >> 1) | (b << 5)) & 0x3F; }

unsigned tail_state(const Bits& info) {
    unsigned s = 0;
    for (size_t i = info.size() - 6; i < info.size(); ++i) s = next_state(s, info[i] & 1u);
    return s;
}

void check_info_len(size_t n) {
    if (n < 8 || n % 2 != 0)
        throw std::invalid_argument("fec: payload length must be even and >= 8");
}

}  // namespace

Bits conv_encode(const Bits& info) {
    check_info_len(info.size());
    Bits out;
    out.reserve(coded_len(info.size()));
    unsigned state = tail_state(info);
    for (size_t i = 0; i < info.size(); ++i) {
        const unsigned b = info[i] & 1u;
        const unsigned reg = (b << 6) | state;
        out.push_back((uint8_t)parity(reg & kG1));
        if (i % 2 == 0) out.push_back((uint8_t)parity(reg & kG2));
        state = next_state(state, b);
    }
    return out;
}

Bits viterbi_decode(const std::vector<double>& soft) {
    if (soft.size() % 3 != 0) throw std::invalid_argument("fec: coded length must be 3k");
    const size_t n_info = soft.size() * 2 / 3;
    check_info_len(n_info);

    // per-step soft values: step i consumes soft[pos] (and soft[pos+1] on even i)
    std::vector<size_t> step_pos(n_info);
    {
        size_t pos = 0;
        for (size_t i = 0; i < n_info; ++i) {
            step_pos[i] = pos;
            pos += (i % 2 == 0) ? 2 : 1;
        }
    }

    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<std::array<uint8_t, kStates>> pred(n_info);  // predecessor state per step
    std::array<double, kStates> metric{}, next{};
    double best_metric = kNegInf;
    Bits best_info;

    for (int start = 0; start < kStates; ++start) {
        metric.fill(kNegInf);
        metric[start] = 0.0;
        for (size_t i = 0; i < n_info; ++i) {
            next.fill(kNegInf);
            const double v1 = soft[step_pos[i]];
            const double v2 = (i % 2 == 0) ? soft[step_pos[i] + 1] : 0.0;
            for (int s = 0; s < kStates; ++s) {
                if (metric[s] == kNegInf) continue;
                for (unsigned b = 0; b <= 1; ++b) {
                    const unsigned reg = (b << 6) | (unsigned)s;
                    double m = metric[s] + (parity(reg & kG1) ? -v1 : v1);
                    if (i % 2 == 0) m += parity(reg & kG2) ? -v2 : v2;
                    const unsigned ns = next_state((unsigned)s, b);
                    if (m > next[ns]) {
                        next[ns] = m;
                        pred[i][ns] = (uint8_t)s;
                    }
                }
            }
            metric = next;
        }
        if (metric[start] > best_metric) {
            best_metric = metric[start];
            // traceback from the constrained end state
            Bits info(n_info);
            unsigned s = (unsigned)start;
            for (size_t i = n_info; i-- > 0;) {
                info[i] = (uint8_t)((s >> 5) & 1u);  // bit fed at step i is the newest state bit
                s = pred[i][s];
            }
            best_info = std::move(info);
        }
    }
    return best_info;
}

Bits viterbi_decode_hard(const Bits& coded) {
    std::vector<double> soft(coded.size());
    for (size_t i = 0; i < coded.size(); ++i) soft[i] = coded[i] ? -1.0 : 1.0;
    return viterbi_decode(soft);
}

}  // namespace uwm::fec
