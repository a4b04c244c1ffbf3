// phy.cpp - OFDM frame modulation and demodulation
#include "uwm/phy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "uwm/dsp.hpp"
#include "uwm/equalize.hpp"
#include "uwm/fec.hpp"
#include "uwm/interleave.hpp"
#include "uwm/preamble.hpp"

namespace uwm::phy {
namespace {

constexpr int kBandpassOrder = 128;
constexpr size_t kPayloadBits = 16;

int active_bins(const TxConfig& cfg) {
    const int w = adapt::band_width(cfg.band);
    if (cfg.band.m < 0 || cfg.band.n >= cfg.modem.num_bins() || w < 1) {
        throw std::invalid_argument("active band outside configured bins");
    }
    return w;
}

size_t symbol_len(const TxConfig& cfg) { return static_cast<size_t>(cfg.modem.symbol_len()); }

size_t preamble_len(const TxConfig& cfg) {
    return static_cast<size_t>(pre::PreambleSpec{}.n_symbols) *
           static_cast<size_t>(cfg.modem.fft_size());
}

// Training bin values on the active band: constant-amplitude polyphase
// sequence with flat spectrum and low peak factor, scaled so the symbol
// carries full-band power.
CVec training_band_values(const TxConfig& cfg) {
    const int w = active_bins(cfg);
    const double amp = active_bin_amplitude(cfg);
    const CVec zc = pre::cazac_sequence(w, 1);
    CVec vals(static_cast<size_t>(cfg.modem.num_bins()), 0.0);
    for (int i = 0; i < w; ++i) {
        vals[static_cast<size_t>(cfg.band.m + i)] = amp * zc[static_cast<size_t>(i)];
    }
    return vals;
}

// Body from full-band bin values, then the tail copied in front as the
// cyclic prefix.
Vec symbol_with_prefix(const CVec& band_vals, const TxConfig& cfg) {
    const Vec body =
        dsp::symbol_from_band_bins(band_vals, cfg.modem.first_bin(), cfg.modem.fft_size());
    const size_t cp = static_cast<size_t>(cfg.modem.cp_len());
    Vec out;
    out.reserve(cp + body.size());
    out.insert(out.end(), body.end() - static_cast<long>(cp), body.end());
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::vector<ileave::SlotRef> bit_slots(size_t n_bits, const TxConfig& cfg) {
    return ileave::make_placement(static_cast<int>(n_bits), active_bins(cfg));
}

}  // namespace

size_t frame_data_symbols(size_t n_bits, const TxConfig& cfg) {
    const size_t w = static_cast<size_t>(active_bins(cfg));
    return (n_bits + w - 1) / w;
}

size_t frame_length(size_t n_bits, const TxConfig& cfg) {
    const size_t s = frame_data_symbols(n_bits, cfg);
    return preamble_len(cfg) + (s + 1) * symbol_len(cfg);
}

size_t packet_length(const TxConfig& cfg) {
    return frame_length(fec::coded_len(kPayloadBits), cfg);
}

double active_bin_amplitude(const TxConfig& cfg) {
    const int w = active_bins(cfg);
    const CVec pre_spec = pre::preamble_symbol_spectrum(pre::PreambleSpec{}, cfg.modem);
    const double pre_amp = std::abs(pre_spec[static_cast<size_t>(cfg.modem.first_bin())]);
    return pre_amp * std::sqrt(static_cast<double>(cfg.modem.num_bins()) / static_cast<double>(w));
}

Vec training_symbol(const TxConfig& cfg) {
    return symbol_with_prefix(training_band_values(cfg), cfg);
}

Vec modulate_frame(const Bits& bits, const TxConfig& cfg) {
    for (uint8_t b : bits) {
        if (b > 1) throw std::invalid_argument("bits must be 0 or 1");
    }
    const size_t w = static_cast<size_t>(active_bins(cfg));
    const size_t n_sym = frame_data_symbols(bits.size(), cfg);
    if (n_sym == 0) throw std::invalid_argument("no bits to modulate");

    Vec signal = pre::build_preamble(pre::PreambleSpec{}, cfg.modem);
    signal.reserve(frame_length(bits.size(), cfg));

    const CVec train_vals = training_band_values(cfg);
    const Vec train = symbol_with_prefix(train_vals, cfg);
    signal.insert(signal.end(), train.begin(), train.end());

    // Per-symbol band values; differential mode chains each symbol off the
    // previous one starting from the training values, coherent mode keys
    // every symbol directly off the training values.
    Bits padded = bits;
    padded.resize(n_sym * w, 0);
    const auto slots = bit_slots(padded.size(), cfg);
    std::vector<CVec> factors(n_sym, CVec(w, 1.0));
    for (size_t j = 0; j < padded.size(); ++j) {
        factors[static_cast<size_t>(slots[j].symbol)][static_cast<size_t>(slots[j].bin)] =
            padded[j] ? -1.0 : 1.0;
    }
    CVec prev(train_vals.begin() + cfg.band.m, train_vals.begin() + cfg.band.n + 1);
    for (size_t i = 0; i < n_sym; ++i) {
        CVec cur(w);
        for (size_t k = 0; k < w; ++k) {
            const cplx base = cfg.differential
                                  ? prev[k]
                                  : train_vals[static_cast<size_t>(cfg.band.m) + k];
            cur[k] = base * factors[i][k];
        }
        CVec band(static_cast<size_t>(cfg.modem.num_bins()), 0.0);
        for (size_t k = 0; k < w; ++k) band[static_cast<size_t>(cfg.band.m) + k] = cur[k];
        const Vec sym = symbol_with_prefix(band, cfg);
        signal.insert(signal.end(), sym.begin(), sym.end());
        prev = std::move(cur);
    }
    return signal;
}

namespace {

// Band-bin spectrum of one symbol body inside the processed stream.
CVec body_band_bins(const Vec& proc, size_t body_begin, const TxConfig& cfg) {
    return dsp::band_bins_from_segment(proc, body_begin, cfg.modem.fft_size(),
                                       cfg.modem.first_bin(), cfg.modem.num_bins());
}

}  // namespace

DemodResult demodulate_frame(const Vec& stream, size_t preamble_start, size_t n_bits,
                             const TxConfig& cfg, const DemodOptions& opt) {
    DemodResult res;
    const size_t w = static_cast<size_t>(active_bins(cfg));
    const size_t n_sym = frame_data_symbols(n_bits, cfg);
    const size_t slen = symbol_len(cfg);
    const size_t cp = static_cast<size_t>(cfg.modem.cp_len());
    if (n_sym == 0) throw std::invalid_argument("no bits requested");

    const Vec* work = &stream;
    Vec filtered;
    if (opt.bandpass) {
        const Vec taps = dsp::design_bandpass(kBandpassOrder, cfg.modem.band_low_hz,
                                              cfg.modem.band_high_hz, cfg.modem.sample_rate);
        filtered = dsp::filter_aligned(stream, taps);
        work = &filtered;
    }

    // Timing: nominal training start right after the preamble, refined by a
    // matched filter against the known training waveform.
    const Vec train = training_symbol(cfg);
    const long long nominal =
        static_cast<long long>(preamble_start) + static_cast<long long>(preamble_len(cfg));
    long long best_begin = nominal;
    if (opt.train_search > 0) {
        double best = -1.0;
        for (long long cand = nominal - opt.train_search; cand <= nominal + opt.train_search;
             ++cand) {
            if (cand < 0 || cand + static_cast<long long>(train.size()) >
                                static_cast<long long>(work->size())) {
                continue;
            }
            double dot = 0.0;
            for (size_t t = 0; t < train.size(); ++t) {
                dot += (*work)[static_cast<size_t>(cand) + t] * train[t];
            }
            if (std::abs(dot) > best) {
                best = std::abs(dot);
                best_begin = cand;
            }
        }
    }
    if (best_begin < 0 ||
        static_cast<size_t>(best_begin) + (n_sym + 1) * slen > work->size()) {
        return res;  // frame runs past the stream
    }
    const size_t train_begin = static_cast<size_t>(best_begin);
    res.train_begin = train_begin;

    // Region covering training + data symbols, equalized as one piece so the
    // anchor and the data see the same filter.
    const size_t region_len = (n_sym + 1) * slen;
    Vec proc;
    if (opt.equalize) {
        eq::EqualizerConfig ec;
        ec.length = cfg.modem.eq_len;
        const Vec g = eq::train_equalizer(*work, train_begin, train, ec);
        proc = eq::apply_equalizer(*work, train_begin, region_len, g, ec.delay);
    } else {
        proc.assign(work->begin() + static_cast<long>(train_begin),
                    work->begin() + static_cast<long>(train_begin + region_len));
    }

    // Anchor spectrum from the received training body; data symbols compare
    // against the previous symbol (differential) or this anchor (coherent).
    CVec full_anchor = body_band_bins(proc, cp, cfg);
    CVec anchor(full_anchor.begin() + cfg.band.m, full_anchor.begin() + cfg.band.n + 1);

    const auto slots = bit_slots(n_sym * w, cfg);
    std::vector<double> soft_all(n_sym * w, 0.0);
    CVec prev = anchor;
    for (size_t i = 0; i < n_sym; ++i) {
        const size_t body = (i + 1) * slen + cp;
        CVec full = body_band_bins(proc, body, cfg);
        CVec cur(full.begin() + cfg.band.m, full.begin() + cfg.band.n + 1);
        const CVec& ref = opt.differential ? prev : anchor;
        for (size_t k = 0; k < w; ++k) {
            const double metric = std::real(cur[k] * std::conj(ref[k]));
            soft_all[i * w + k] = metric;  // stored by (symbol, bin); mapped below
        }
        prev = std::move(cur);
    }

    res.soft.resize(n_bits);
    res.bits.resize(n_bits);
    for (size_t j = 0; j < n_bits; ++j) {
        const double s =
            soft_all[static_cast<size_t>(slots[j].symbol) * w + static_cast<size_t>(slots[j].bin)];
        res.soft[j] = s;
        res.bits[j] = s > 0.0 ? 0 : 1;
    }
    res.ok = true;
    return res;
}

Vec modulate_packet(uint16_t payload, uint32_t packet_index, const TxConfig& cfg) {
    Bits info(kPayloadBits);
    for (size_t i = 0; i < kPayloadBits; ++i) {
        info[i] = static_cast<uint8_t>((payload >> (kPayloadBits - 1 - i)) & 1u);
    }
    const Bits coded = fec::conv_encode(info);
    const size_t w = static_cast<size_t>(active_bins(cfg));
    const size_t n_sym = frame_data_symbols(coded.size(), cfg);

    Bits frame_bits = coded;
    frame_bits.resize(n_sym * w);
    std::mt19937 rng(packet_index * 2654435761u + 0x9e3779b9u);
    for (size_t j = coded.size(); j < frame_bits.size(); ++j) {
        frame_bits[j] = static_cast<uint8_t>(rng() & 1u);
    }
    return modulate_frame(frame_bits, cfg);
}

PacketResult demodulate_packet(const Vec& stream, size_t preamble_start, const TxConfig& cfg,
                               const DemodOptions& opt) {
    PacketResult out;
    const size_t n_coded = fec::coded_len(kPayloadBits);
    out.frame = demodulate_frame(stream, preamble_start, n_coded, cfg, opt);
    if (!out.frame.ok) return out;

    Bits info;
    if (opt.soft) {
        info = fec::viterbi_decode(out.frame.soft);
    } else {
        std::vector<double> hard(n_coded);
        for (size_t j = 0; j < n_coded; ++j) {
            hard[j] = out.frame.bits[j] ? -1.0 : 1.0;
        }
        info = fec::viterbi_decode(hard);
    }
    uint16_t payload = 0;
    for (size_t i = 0; i < kPayloadBits; ++i) {
        payload = static_cast<uint16_t>((payload << 1) | info[i]);
    }
    out.payload = payload;
    out.ok = true;
    return out;
}

}  // namespace uwm::phy
