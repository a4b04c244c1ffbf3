// protocol.hpp - link-layer state machines: handshake, band feedback, data, ACK
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uwm/adapt.hpp"
#include "uwm/config.hpp"
#include "uwm/phy.hpp"
#include "uwm/preamble.hpp"
#include "uwm/types.hpp"

namespace uwm::proto {

// Link parameters shared by both ends of an exchange.  Addresses are small
// integers mapped one-hot onto the subcarriers, which caps the local network
// at one device per usable bin (60 at the default spacing).
struct ProtocolConfig {
    ModemConfig modem;
    pre::PreambleSpec preamble;
    int local_id = 0;        // this node's address
    int dest_id = 0;         // sender side: address announced in the header symbol
    bool differential = true;
    int max_attempts = 3;    // handshake tries before giving up
    double max_rtt_s = 0.040;      // round-trip propagation allowance (~30 m)
    int processing_symbols = 5;    // decode/turnaround allowance, in OFDM symbols

    // How long either end waits for the other's reply before moving on.
    int reply_timeout_samples() const {
        return static_cast<int>(std::lround(max_rtt_s * modem.sample_rate)) +
               processing_symbols * modem.symbol_len();
    }
    void validate() const;
};

// Header/ACK symbols: one OFDM symbol (with cyclic prefix) carrying all of its
// power in a single subcarrier.  The ACK reuses the lowest in-band bin.
Vec encode_id_symbol(int id, const ModemConfig& cfg);
std::optional<int> decode_id_symbol(const Vec& stream, size_t begin, const ModemConfig& cfg);
Vec encode_ack_symbol(const ModemConfig& cfg);

// Scan [begin, begin+len) for an ACK symbol: the lowest-bin power must sit at
// least 6 dB above the in-band median, persistently across a run of windows.
std::optional<size_t> detect_ack(const Vec& stream, size_t begin, size_t len,
                                 const ModemConfig& cfg);

enum class SenderPhase { idle, preamble_sent, awaiting_feedback, sending_data, awaiting_ack, done, aborted };
enum class ReceiverPhase { idle, checking_id, receiving };

// Absolute-time output scheduler: waveforms are placed at sample timestamps
// and drained block by block, with zeros filling every unscheduled sample
// (the speaker buffer is never starved).
struct OutQueue {
    Vec buf;
    uint64_t base = 0;
    void add(uint64_t t, const Vec& w);
    Vec drain(size_t n);
};

// Initiator ("Alice").  Drive with step(): each call consumes one block of
// microphone samples and produces an equally sized speaker block.  The
// exchange: preamble + ID header, silence while the far end measures SNR and
// returns its band choice, then training + data on the symbol grid anchored
// at the preamble start, then silence until the ACK or a timeout.
class Sender {
  public:
    explicit Sender(const ProtocolConfig& cfg);
    void start(uint16_t payload);
    Vec step(const Vec& incoming);

    SenderPhase phase() const { return phase_; }
    bool succeeded() const { return phase_ == SenderPhase::done; }
    bool failed() const { return phase_ == SenderPhase::aborted; }
    int attempts() const { return attempts_; }
    const std::string& diagnostic() const { return diag_; }
    adapt::BandSelection negotiated_band() const { return band_; }
    uint64_t preamble_start_time() const { return preamble_start_; }
    uint64_t data_start_time() const { return data_start_; }

  private:
    bool advance();
    void begin_attempt();
    void plan_data();
    void retry_or_abort(const std::string& reason);

    ProtocolConfig cfg_;
    SenderPhase phase_ = SenderPhase::idle;
    uint16_t payload_ = 0;
    int attempts_ = 0;
    std::string diag_;
    adapt::BandSelection band_;
    Vec rx_;
    OutQueue out_;
    uint64_t emitted_ = 0;
    uint64_t preamble_start_ = 0;
    uint64_t id_end_ = 0;
    uint64_t fb_deadline_ = 0;
    uint64_t fb_cursor_ = 0;
    uint64_t data_start_ = 0;
    uint64_t data_end_ = 0;
    uint64_t ack_deadline_ = 0;
    uint64_t ack_cursor_ = 0;
};

// Responder ("Bob").  Continuously watches for a preamble; on detection it
// checks the header address (silently ignoring other destinations), measures
// per-bin SNR from the preamble, replies with the selected band, then scans
// each OFDM interval on the preamble-anchored grid for the training symbol
// and decodes the frame that follows.  A good decode is answered with an ACK.
class Receiver {
  public:
    explicit Receiver(const ProtocolConfig& cfg);
    Vec step(const Vec& incoming);

    struct Delivery {
        uint16_t payload;
        uint64_t sample_time;  // training-symbol position in the receive stream
    };

    ReceiverPhase phase() const { return phase_; }
    const std::vector<Delivery>& deliveries() const { return deliveries_; }
    adapt::BandSelection selected_band() const { return band_; }
    uint64_t preamble_time() const { return preamble_pos_; }

    // Acceptance check applied before ACKing.  The air interface carries no
    // integrity field, so simulations plug in a ground-truth oracle here; a
    // real deployment would hook a checksum in the same place.  Unset: any
    // frame that decodes is accepted.
    std::function<bool(uint16_t)> ack_oracle;

  private:
    bool advance();
    bool training_present(uint64_t t, uint64_t limit, size_t* refined) const;

    ProtocolConfig cfg_;
    phy::TxConfig txcfg_;
    Vec train_ref_;
    ReceiverPhase phase_ = ReceiverPhase::idle;
    adapt::BandSelection band_;
    Vec rx_;
    OutQueue out_;
    uint64_t emitted_ = 0;
    uint64_t det_cursor_ = 0;
    uint64_t det_mark_ = 0;
    uint64_t preamble_pos_ = 0;
    uint64_t recv_deadline_ = 0;
    int slot_k_ = 0;
    bool train_found_ = false;
    uint64_t train_pos_ = 0;
    std::vector<Delivery> deliveries_;
};

// Plain-text message table: one message per line, '#' comments and blank
// lines skipped; the line order defines the 8-bit message index.
std::vector<std::string> load_message_catalog(const std::string& path);

}  // namespace uwm::proto
