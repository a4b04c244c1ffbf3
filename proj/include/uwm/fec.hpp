// fec.hpp - rate-2/3 punctured convolutional code (K=7) with exact-ML decoding
#pragma once

#include "uwm/types.hpp"

namespace uwm::fec {

// Encode an even-length payload (>= 8 bits) with the K=7 mother code
// (generators 171/133 octal) punctured to rate 2/3: even steps emit both
// parity bits, odd steps emit only the first. The trellis is tail-biting
// (initial state = last 6 payload bits), so n bits -> exactly 3n/2 bits and
// the all-zero payload maps to the all-zero codeword. 16 -> 24.
Bits conv_encode(const Bits& info);

// Maximum-likelihood decode of soft values, one per coded bit: positive
// favors 0, negative favors 1, magnitude is confidence. Exact ML over the
// tail-biting trellis: Viterbi constrained to each of the 64 start=end
// states, best overall wins. Length must be 3k for even k >= 8... (3/2 * n).
Bits viterbi_decode(const std::vector<double>& soft);

// Hard-decision wrapper: 0/1 in, unit confidences internally.
Bits viterbi_decode_hard(const Bits& coded);

// Coded length for a payload of n info bits.
inline size_t coded_len(size_t info_len) { return info_len * 3 / 2; }

}  // namespace uwm::fec
