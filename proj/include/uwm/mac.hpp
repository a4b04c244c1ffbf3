#pragma once
// Discrete-event simulation of several modem nodes sharing the water column.
//
// The medium is abstracted to packet granularity: a transmission is an
// interval of in-band energy that propagates at the speed of sound and decays
// with inverse-square spreading.  Nodes that carrier-sense measure the summed
// energy of everyone else's ongoing transmissions (plus ambient noise) on a
// private 80 ms grid; a busy verdict defers them by a whole-packet random
// backoff that stretches by one packet duration for each fresh transmission
// overheard while waiting.  Collisions are scored after the run from receiver
// arrival times: two packets from different senders whose arrivals fall
// within one packet duration of each other are both marked.
//
// A slow companion mode (`run_full_phy`) replaces the abstraction with the
// real sample-level sender and receiver state machines to confirm that the
// packet picture matches what the actual modem experiences.

#include <cstdint>
#include <string>
#include <vector>

#include "uwm/types.hpp"

namespace uwm::mac {

struct Node {
    int id = 0;
    double position_m = 0.0;
    // Mean packets per second (Poisson arrivals); 0 originates no traffic
    // (a listening post), negative means continuous back-to-back load.
    double offered_load_pps = 0.0;
    bool cs_enabled = false;
};

struct MacConfig {
    double duration_s = 60.0;
    double packet_duration_s = 0.3;
    double sense_period_s = 0.08;
    double sound_speed_mps = 1500.0;
    // Ambient noise energy at every sensor; the busy threshold is calibrated
    // as this level raised by busy_over_noise_db (both are knobs because the
    // deployed values are device measurements, not protocol constants).
    double noise_energy = 1.0;
    double busy_over_noise_db = 6.0;
    // Transmit energy referenced to 1 m; received energy falls off as 1/r^2,
    // which bounds the sensing range (~58 m with the defaults above).
    double tx_energy_1m = 1.0e4;
    int backoff_min_packets = 1;
    int backoff_max_packets = 8;
    int receiver_id = 0;
    uint32_t seed = 1;
    void validate() const;
};

enum class EventKind {
    arrival,
    sense_busy,
    sense_idle,
    backoff_set,
    backoff_extend,
    tx_start,
    tx_end,
};

struct TraceEvent {
    double time_s = 0.0;
    int node = 0;
    EventKind kind = EventKind::arrival;
    // backoff_set / backoff_extend carry the (new) expiry time; tx events
    // carry the packet index; otherwise 0.
    double value = 0.0;
};

struct Transmission {
    int node = 0;
    double start_s = 0.0;
    double end_s = 0.0;
};

struct PacketRecord {
    int node = 0;
    double tx_time_s = 0.0;
    double rx_time_s = 0.0;  // arrival at the designated receiver
    bool collided = false;
};

struct NodeStats {
    int node = 0;
    int sent = 0;
    int collided = 0;
};

struct RunResult {
    std::vector<NodeStats> per_node;
    std::vector<PacketRecord> packets;
    std::vector<TraceEvent> trace;
    double packet_duration_s = 0.0;
    int total_sent() const;
    int total_collided() const;
    double collision_fraction() const;  // 0 when nothing was sent
};

struct Scenario {
    MacConfig config;
    std::vector<Node> nodes;
    void validate() const;
};

// True when the summed energy of other nodes' listed transmissions, as heard
// at `node_id` at time `t` (propagation-delayed, distance-attenuated, plus
// ambient noise), exceeds the busy threshold.
bool channel_busy(const Scenario& s, const std::vector<Transmission>& active, int node_id,
                  double t);

RunResult run_network(const Scenario& s);

// Scenario text format: '#' comments; `duration`, `seed`, `packet_duration`,
// `sense_period`, `receiver` key/value lines; one `node <id> <pos_m> <load>
// <on|off>` line per node where load is packets/s, `0` for a listening post,
// or `cont` for continuous.
Scenario load_scenario(const std::string& path);
void save_csv(const RunResult& r, const std::string& path);
void save_trace(const RunResult& r, const std::string& path);

// Full-modem validation of the packet abstraction: each entry is a real
// sender state machine placed in the water, started at a scheduled time
// (deferred by sample-level carrier sense when enabled), all addressing one
// real receiver.  Returns the payloads the receiver actually delivered and
// each sender's own verdict.
struct PhyNodeSpec {
    double position_m = 0.0;
    double start_time_s = 0.0;
    uint16_t payload = 0;
    bool cs_enabled = false;
};

struct PhyRunResult {
    std::vector<uint16_t> delivered;
    std::vector<bool> sender_succeeded;
};

PhyRunResult run_full_phy(const std::vector<PhyNodeSpec>& senders, double receiver_pos_m,
                          const MacConfig& cfg, double duration_s);

}  // namespace uwm::mac
