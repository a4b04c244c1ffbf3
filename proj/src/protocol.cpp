// protocol.cpp - link-layer state machines: handshake, band feedback, data, ACK
#include "uwm/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "uwm/dsp.hpp"

namespace uwm::proto {

namespace {

constexpr uint64_t kStartMargin = 256;     // scheduling slack before a transmission
constexpr uint64_t kDetectBatch = 2048;    // new samples between preamble scans
constexpr uint64_t kDetectPad = 2048;      // refinement margin past the preamble
constexpr uint64_t kDetectOverlap = 1600;  // rescan overlap for straddling preambles
constexpr uint64_t kScanOverlap = 16;      // rescan overlap for tone searches
constexpr int kTrainScanHalf = 16;         // training presence test: +/- offsets...
constexpr int kTrainScanStep = 4;          // ...probed at this granularity
constexpr double kTrainDetectThreshold = 0.35;
constexpr double kIdDominanceFraction = 0.5;  // one-hot bin share of in-band power
constexpr double kAckOverMedianDb = 6.0;
constexpr size_t kAckScanStep = 16;
constexpr int kAckRunWindows = 8;  // consecutive qualifying windows to call it an ACK

double median_of(std::vector<double> v) {
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
    return v[mid];
}

}  // namespace

void ProtocolConfig::validate() const {
    modem.validate();
    if (local_id < 0 || local_id >= modem.num_bins() || dest_id < 0 ||
        dest_id >= modem.num_bins()) {
        throw std::invalid_argument("protocol: device ids must map onto the usable bins");
    }
    if (max_attempts < 1) throw std::invalid_argument("protocol: need at least one attempt");
    if (max_rtt_s < 0 || processing_symbols < 0) {
        throw std::invalid_argument("protocol: timeout terms must be nonnegative");
    }
}

Vec encode_id_symbol(int id, const ModemConfig& cfg) {
    if (id < 0 || id >= cfg.num_bins()) {
        throw std::invalid_argument("id symbol: id outside the usable bins");
    }
    phy::TxConfig one_hot;
    one_hot.modem = cfg;
    one_hot.band = {id, id, false};
    CVec vals(static_cast<size_t>(cfg.num_bins()), 0.0);
    vals[static_cast<size_t>(id)] = phy::active_bin_amplitude(one_hot);
    const Vec body = dsp::symbol_from_band_bins(vals, cfg.first_bin(), cfg.fft_size());
    const size_t cp = static_cast<size_t>(cfg.cp_len());
    Vec sym(cp + body.size());
    std::copy(body.end() - static_cast<long>(cp), body.end(), sym.begin());
    std::copy(body.begin(), body.end(), sym.begin() + static_cast<long>(cp));
    return sym;
}

std::optional<int> decode_id_symbol(const Vec& stream, size_t begin, const ModemConfig& cfg) {
    const size_t n = static_cast<size_t>(cfg.fft_size());
    // Start mid-prefix: a timing error up to half the prefix in either
    // direction only rotates the symbol, which leaves bin powers intact.
    const size_t body = begin + static_cast<size_t>(cfg.cp_len()) / 2;
    if (body + n > stream.size()) return std::nullopt;
    const CVec bins =
        dsp::band_bins_from_segment(stream, body, cfg.fft_size(), cfg.first_bin(), cfg.num_bins());
    double total = 0.0, best = -1.0;
    int best_id = 0;
    for (size_t b = 0; b < bins.size(); ++b) {
        const double p = std::norm(bins[b]);
        total += p;
        if (p > best) {
            best = p;
            best_id = static_cast<int>(b);
        }
    }
    if (total <= 0.0 || best < kIdDominanceFraction * total) return std::nullopt;
    return best_id;
}

Vec encode_ack_symbol(const ModemConfig& cfg) { return encode_id_symbol(0, cfg); }

std::optional<size_t> detect_ack(const Vec& stream, size_t begin, size_t len,
                                 const ModemConfig& cfg) {
    if (begin > stream.size() || len > stream.size() - begin) {
        throw std::out_of_range("ack search window outside stream");
    }
    const size_t n = static_cast<size_t>(cfg.fft_size());
    if (len < n) return std::nullopt;
    const double ratio = std::pow(10.0, kAckOverMedianDb / 10.0);
    // A single window clearing the median test is common in plain noise, so
    // require the signature to persist across a run of adjacent windows.
    int run = 0;
    size_t run_start = 0;
    std::vector<double> power(static_cast<size_t>(cfg.num_bins()));
    for (size_t off = 0; off + n <= len; off += kAckScanStep) {
        const CVec bins = dsp::band_bins_from_segment(stream, begin + off, cfg.fft_size(),
                                                      cfg.first_bin(), cfg.num_bins());
        double best = 0.0;
        for (size_t b = 0; b < bins.size(); ++b) {
            power[b] = std::norm(bins[b]);
            best = std::max(best, power[b]);
        }
        const double med = median_of(power);
        const bool hit = power[0] > ratio * med && power[0] >= best && power[0] > 0.0;
        if (hit) {
            if (run == 0) run_start = begin + off;
            if (++run >= kAckRunWindows) return run_start;
        } else {
            run = 0;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Output scheduling

void OutQueue::add(uint64_t t, const Vec& w) {
    size_t skip = 0;
    uint64_t at = t;
    if (at < base) {  // waveform scheduled into already-drained time: clip it
        skip = static_cast<size_t>(base - at);
        if (skip >= w.size()) return;
        at = base;
    }
    const size_t off = static_cast<size_t>(at - base);
    if (buf.size() < off + w.size() - skip) buf.resize(off + w.size() - skip, 0.0);
    for (size_t i = skip; i < w.size(); ++i) buf[off + i - skip] += w[i];
}

Vec OutQueue::drain(size_t n) {
    if (buf.size() < n) buf.resize(n, 0.0);
    Vec head(buf.begin(), buf.begin() + static_cast<long>(n));
    buf.erase(buf.begin(), buf.begin() + static_cast<long>(n));
    base += n;
    return head;
}

// ---------------------------------------------------------------------------
// Sender

Sender::Sender(const ProtocolConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

void Sender::start(uint16_t payload) {
    payload_ = payload;
    attempts_ = 0;
    diag_.clear();
    begin_attempt();
}

Vec Sender::step(const Vec& incoming) {
    rx_.insert(rx_.end(), incoming.begin(), incoming.end());
    while (advance()) {
    }
    Vec out = out_.drain(incoming.size());
    emitted_ = out_.base;
    return out;
}

void Sender::begin_attempt() {
    ++attempts_;
    const uint64_t slen = static_cast<uint64_t>(cfg_.modem.symbol_len());
    const uint64_t start = emitted_ + kStartMargin;
    preamble_start_ = start;
    out_.add(start, pre::build_preamble(cfg_.preamble, cfg_.modem));
    out_.add(start + 8 * slen, encode_id_symbol(cfg_.dest_id, cfg_.modem));
    id_end_ = start + 9 * slen;
    phase_ = SenderPhase::preamble_sent;
}

void Sender::plan_data() {
    phy::TxConfig tx;
    tx.modem = cfg_.modem;
    tx.band = band_;
    tx.differential = cfg_.differential;
    const Vec full = phy::modulate_packet(payload_, static_cast<uint32_t>(attempts_), tx);
    const size_t plen =
        static_cast<size_t>(cfg_.preamble.n_symbols) * static_cast<size_t>(cfg_.modem.fft_size());
    const Vec body(full.begin() + static_cast<long>(plen), full.end());

    // Training and data go out on the next symbol boundary of the grid that
    // the preamble start anchored.
    const uint64_t slen = static_cast<uint64_t>(cfg_.modem.symbol_len());
    const uint64_t k = (emitted_ + kStartMargin - preamble_start_ + slen - 1) / slen;
    data_start_ = preamble_start_ + k * slen;
    out_.add(data_start_, body);
    data_end_ = data_start_ + body.size();
}

void Sender::retry_or_abort(const std::string& reason) {
    if (attempts_ >= cfg_.max_attempts) {
        phase_ = SenderPhase::aborted;
        diag_ = reason + " after " + std::to_string(attempts_) + " attempts";
    } else {
        begin_attempt();
    }
}

bool Sender::advance() {
    const uint64_t now = rx_.size();
    const uint64_t fft = static_cast<uint64_t>(cfg_.modem.fft_size());
    switch (phase_) {
        case SenderPhase::idle:
        case SenderPhase::done:
        case SenderPhase::aborted:
            return false;
        case SenderPhase::preamble_sent:
            if (emitted_ >= id_end_) {
                fb_cursor_ = id_end_;
                fb_deadline_ = id_end_ + static_cast<uint64_t>(cfg_.reply_timeout_samples());
                phase_ = SenderPhase::awaiting_feedback;
                return true;
            }
            return false;
        case SenderPhase::awaiting_feedback: {
            const uint64_t scan_end = std::min(now, fb_deadline_ + fft);
            if (scan_end > fb_cursor_ && scan_end - fb_cursor_ >= fft + 4 * kScanOverlap) {
                const auto sel =
                    adapt::decode_feedback(rx_, static_cast<size_t>(fb_cursor_),
                                           static_cast<size_t>(scan_end - fb_cursor_), cfg_.modem);
                if (sel) {
                    band_ = *sel;
                    plan_data();
                    phase_ = SenderPhase::sending_data;
                    return true;
                }
                fb_cursor_ = scan_end - fft - kScanOverlap;
            }
            if (now >= fb_deadline_ + fft) {
                retry_or_abort("no feedback");
                return true;
            }
            return false;
        }
        case SenderPhase::sending_data:
            if (emitted_ >= data_end_) {
                ack_cursor_ = data_end_;
                ack_deadline_ = data_end_ + static_cast<uint64_t>(cfg_.reply_timeout_samples());
                phase_ = SenderPhase::awaiting_ack;
                return true;
            }
            return false;
        case SenderPhase::awaiting_ack: {
            // The persistence test needs a full run of windows inside one
            // scan segment, whatever the feed granularity, and consecutive
            // segments must overlap by a run so one straddling a boundary is
            // still seen whole.
            const uint64_t ack_run = kAckRunWindows * kAckScanStep;
            const uint64_t scan_end = std::min(now, ack_deadline_ + fft);
            if (scan_end > ack_cursor_ && scan_end - ack_cursor_ >= fft + 2 * ack_run) {
                const auto ack =
                    detect_ack(rx_, static_cast<size_t>(ack_cursor_),
                               static_cast<size_t>(scan_end - ack_cursor_), cfg_.modem);
                if (ack) {
                    phase_ = SenderPhase::done;
                    return true;
                }
                ack_cursor_ = scan_end - fft - ack_run;
            }
            if (now >= ack_deadline_ + fft) {
                retry_or_abort("no acknowledgment");
                return true;
            }
            return false;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Receiver

Receiver::Receiver(const ProtocolConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

Vec Receiver::step(const Vec& incoming) {
    rx_.insert(rx_.end(), incoming.begin(), incoming.end());
    while (advance()) {
    }
    Vec out = out_.drain(incoming.size());
    emitted_ = out_.base;
    return out;
}

bool Receiver::training_present(uint64_t t, uint64_t limit, size_t* refined) const {
    const size_t n = train_ref_.size();
    double ref_e = 0.0;
    for (double v : train_ref_) ref_e += v * v;
    double best = 0.0;
    size_t best_pos = static_cast<size_t>(t);
    for (int d = -kTrainScanHalf; d <= kTrainScanHalf; d += kTrainScanStep) {
        const uint64_t b = t + static_cast<uint64_t>(d);
        if (b + n > limit) continue;
        double dot = 0.0, e = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double s = rx_[static_cast<size_t>(b) + i];
            dot += s * train_ref_[i];
            e += s * s;
        }
        const double c = dot / std::sqrt(e * ref_e + 1e-30);
        if (c > best) {
            best = c;
            best_pos = static_cast<size_t>(b);
        }
    }
    if (best < kTrainDetectThreshold) return false;
    if (refined) *refined = best_pos;
    return true;
}

bool Receiver::advance() {
    const uint64_t now = rx_.size();
    const uint64_t slen = static_cast<uint64_t>(cfg_.modem.symbol_len());
    const uint64_t plen = static_cast<uint64_t>(cfg_.preamble.n_symbols) *
                          static_cast<uint64_t>(cfg_.modem.fft_size());
    switch (phase_) {
        case ReceiverPhase::idle: {
            if (now < det_cursor_ + plen + kDetectPad) return false;
            if (now - det_mark_ < kDetectBatch) return false;
            det_mark_ = now;
            const Vec window(rx_.begin() + static_cast<long>(det_cursor_), rx_.end());
            const auto sync = pre::detect_and_sync(window, cfg_.preamble, cfg_.modem);
            if (sync) {
                preamble_pos_ = det_cursor_ + sync->sample_index;
                phase_ = ReceiverPhase::checking_id;
                return true;
            }
            det_cursor_ = now - plen - kDetectOverlap;
            return false;
        }
        case ReceiverPhase::checking_id: {
            if (now < preamble_pos_ + 9 * slen + 64) return false;
            const auto id = decode_id_symbol(
                rx_, static_cast<size_t>(preamble_pos_ + 8 * slen), cfg_.modem);
            if (!id || *id != cfg_.local_id) {  // not for us: stay silent
                det_cursor_ = std::max(det_cursor_, preamble_pos_ + 9 * slen);
                phase_ = ReceiverPhase::idle;
                return true;
            }
            const auto snr = adapt::preamble_snr(rx_, static_cast<size_t>(preamble_pos_),
                                                 cfg_.preamble, cfg_.modem);
            band_ = adapt::select_band(snr, cfg_.modem.snr_threshold_db, cfg_.modem.realloc_lambda);
            txcfg_.modem = cfg_.modem;
            txcfg_.band = band_;
            txcfg_.differential = cfg_.differential;
            train_ref_ = phy::training_symbol(txcfg_);
            out_.add(emitted_, adapt::encode_feedback(band_, cfg_.modem));
            recv_deadline_ =
                emitted_ + static_cast<uint64_t>(cfg_.reply_timeout_samples()) + 8 * slen;
            slot_k_ = 9;  // the ID header occupies slot 8
            train_found_ = false;
            phase_ = ReceiverPhase::receiving;
            return true;
        }
        case ReceiverPhase::receiving: {
            if (!train_found_) {
                while (true) {
                    const uint64_t t = preamble_pos_ + static_cast<uint64_t>(slot_k_) * slen;
                    if (t + slen + kTrainScanHalf > now) break;
                    if (training_present(t, now, nullptr)) {
                        train_found_ = true;
                        train_pos_ = t;
                        break;
                    }
                    ++slot_k_;
                }
                if (!train_found_) {
                    if (now >= recv_deadline_) {
                        det_cursor_ = std::max(det_cursor_, preamble_pos_ + 9 * slen);
                        phase_ = ReceiverPhase::idle;
                        return true;
                    }
                    return false;
                }
            }
            const uint64_t n_sym =
                (static_cast<uint64_t>(phy::packet_length(txcfg_)) - plen) / slen;
            const uint64_t frame_end = train_pos_ + n_sym * slen;
            if (now < frame_end + 64) return false;
            phy::DemodOptions opt;
            opt.differential = cfg_.differential;
            const auto res =
                phy::demodulate_packet(rx_, static_cast<size_t>(train_pos_ - plen), txcfg_, opt);
            const bool good = res.ok && (ack_oracle ? ack_oracle(res.payload) : true);
            if (good) {
                deliveries_.push_back({res.payload, train_pos_});
                out_.add(emitted_, encode_ack_symbol(cfg_.modem));
            }
            det_cursor_ = std::max(det_cursor_, frame_end);
            phase_ = ReceiverPhase::idle;
            return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------

std::vector<std::string> load_message_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open message catalog: " + path);
    std::vector<std::string> catalog;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        catalog.push_back(line);
    }
    if (catalog.size() > 256) {
        throw std::runtime_error("message catalog: indices must fit in 8 bits");
    }
    return catalog;
}

}  // namespace uwm::proto
