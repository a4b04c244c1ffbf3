// phy.hpp - OFDM frame modulation and demodulation
#pragma once

#include <cstdint>
#include <vector>

#include "uwm/adapt.hpp"
#include "uwm/config.hpp"
#include "uwm/types.hpp"

namespace uwm::phy {

// Transmit-side frame parameters shared (out of band or via feedback) with
// the receiver: the numerology, the active bin range, and whether bits ride
// on symbol-to-symbol phase changes or on absolute phase.
struct TxConfig {
    ModemConfig modem;
    adapt::BandSelection band{0, 59, false};
    bool differential = true;
};

struct DemodOptions {
    bool bandpass = true;      // band-limit the stream before processing
    bool equalize = true;      // train/apply the time-domain equalizer
    bool differential = true;  // must match the transmit side
    bool soft = true;          // feed soft metrics into the decoder
    int train_search = 24;     // timing refinement around the nominal training start, +/- samples
};

struct DemodResult {
    bool ok = false;
    Bits bits;                 // hard decisions, one per requested bit
    std::vector<double> soft;  // positive favors bit 0
    size_t train_begin = 0;    // refined training-symbol start in the stream
};

struct PacketResult {
    bool ok = false;
    uint16_t payload = 0;
    DemodResult frame;
};

// Frame layout: [preamble, no prefixes][training symbol][data symbols],
// where training and data symbols each carry a cyclic prefix.
size_t frame_data_symbols(size_t n_bits, const TxConfig& cfg);
size_t frame_length(size_t n_bits, const TxConfig& cfg);
size_t packet_length(const TxConfig& cfg);

// Per-bin amplitude for training/data so every symbol carries the same total
// power as a preamble symbol regardless of how few bins are active.
double active_bin_amplitude(const TxConfig& cfg);

// The known training symbol (prefix + body) used for timing refinement,
// equalizer fitting, and as the phase anchor.
Vec training_symbol(const TxConfig& cfg);

// Complete transmit signal (preamble + training + data) for arbitrary bits,
// laid out through the interleaver; short tails are zero-padded to a whole
// symbol.
Vec modulate_frame(const Bits& bits, const TxConfig& cfg);

// Demodulate n_bits from a frame whose preamble starts at preamble_start.
DemodResult demodulate_frame(const Vec& stream, size_t preamble_start, size_t n_bits,
                             const TxConfig& cfg, const DemodOptions& opt);

// Complete transmit signal for a 16-bit payload: convolutionally encoded and
// interleaved; slots left over after the coded bits are filled with
// pseudo-noise keyed by packet_index.
Vec modulate_packet(uint16_t payload, uint32_t packet_index, const TxConfig& cfg);
PacketResult demodulate_packet(const Vec& stream, size_t preamble_start, const TxConfig& cfg,
                               const DemodOptions& opt);

}  // namespace uwm::phy
