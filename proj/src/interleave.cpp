// interleave.cpp - stride-walk interleaver
#include "uwm/interleave.hpp"

#include <numeric>
#include <stdexcept>

namespace uwm::ileave {

std::vector<int> interleave_order(int used_bins) {
    if (used_bins < 1) throw std::invalid_argument("interleave_order: need >= 1 bin");
    std::vector<int> order;
    order.reserve(used_bins);
    const int stride = used_bins / 3;
    if (stride < 1) {  // fewer than 3 bins: no interleaving
        order.resize(used_bins);
        std::iota(order.begin(), order.end(), 0);
        return order;
    }
    const int g = std::gcd(stride, used_bins);
    for (int off = 0; off < g; ++off) {
        int pos = off;
        do {
            order.push_back(pos);
            pos = (pos + stride) % used_bins;
        } while (pos != off);
    }
    return order;
}

std::vector<SlotRef> make_placement(int n_bits, int used_bins) {
    std::vector<int> order = interleave_order(used_bins);
    std::vector<SlotRef> placement(n_bits);
    for (int i = 0; i < n_bits; ++i)
        placement[i] = SlotRef{i / used_bins, order[i % used_bins]};
    return placement;
}

}  // namespace uwm::ileave
