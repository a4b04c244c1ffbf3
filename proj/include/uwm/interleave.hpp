// interleave.hpp - frequency interleaver: stride walk across the selected bins
#pragma once

#include <vector>

namespace uwm::ileave {

// Within-symbol visit order over used_bins slots: stride floor(used_bins/3),
// walking each residue cycle in turn (0, s, 2s, ... then 1, 1+s, ...).
// Fewer than 3 bins degenerates to the identity (no interleaving).
std::vector<int> interleave_order(int used_bins);

// Placement of coded bit i onto (symbol, bin-within-band):
// symbols fill one at a time; within a symbol, bins follow interleave_order.
struct SlotRef {
    int symbol;
    int bin;
};
std::vector<SlotRef> make_placement(int n_bits, int used_bins);

}  // namespace uwm::ileave
