// mac.cpp - shared-medium simulation: carrier sense, backoff, collision scoring
#include "uwm/mac.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "uwm/dsp.hpp"
#include "uwm/protocol.hpp"

namespace uwm::mac {
namespace {

constexpr double kTimeEps = 1e-12;

double busy_threshold(const MacConfig& cfg) {
    return cfg.noise_energy * std::pow(10.0, cfg.busy_over_noise_db / 10.0);
}

// Summed energy of other nodes' transmissions as heard at `pos` at time `t`;
// optionally collects the indices of the transmissions currently audible.
double heard_energy(const Scenario& s, const std::vector<Transmission>& active, int node_id,
                    double pos, double t, std::vector<size_t>* heard) {
    double sum = 0.0;
    for (size_t i = 0; i < active.size(); ++i) {
        const Transmission& tx = active[i];
        if (tx.node == node_id) continue;
        double src_pos = 0.0;
        bool found = false;
        for (const Node& n : s.nodes) {
            if (n.id == tx.node) {
                src_pos = n.position_m;
                found = true;
                break;
            }
        }
        if (!found) throw std::invalid_argument("transmission from unknown node");
        const double r = std::abs(src_pos - pos);
        const double arrive = tx.start_s + r / s.config.sound_speed_mps;
        const double leave = tx.end_s + r / s.config.sound_speed_mps;
        if (t < arrive || t >= leave) continue;
        sum += s.config.tx_energy_1m / std::max(r, 1.0) / std::max(r, 1.0);
        if (heard != nullptr) heard->push_back(i);
    }
    return sum;
}

}  // namespace

void MacConfig::validate() const {
    if (duration_s <= 0.0) throw std::invalid_argument("duration must be positive");
    if (packet_duration_s <= 0.0) throw std::invalid_argument("packet duration must be positive");
    if (sense_period_s <= 0.0) throw std::invalid_argument("sense period must be positive");
    if (sound_speed_mps <= 0.0) throw std::invalid_argument("sound speed must be positive");
    if (noise_energy <= 0.0) throw std::invalid_argument("noise energy must be positive");
    if (tx_energy_1m <= 0.0) throw std::invalid_argument("transmit energy must be positive");
    if (backoff_min_packets < 1 || backoff_max_packets < backoff_min_packets) {
        throw std::invalid_argument("backoff range must satisfy 1 <= min <= max");
    }
}

void Scenario::validate() const {
    config.validate();
    if (nodes.empty()) throw std::invalid_argument("scenario needs at least one node");
    std::set<int> ids;
    bool receiver_found = false;
    for (const Node& n : nodes) {
        if (!ids.insert(n.id).second) throw std::invalid_argument("duplicate node id");
        if (std::abs(n.position_m) > 10000.0) {
            throw std::invalid_argument("node position outside the simulated range");
        }
        if (n.id == config.receiver_id) {
            receiver_found = true;
            if (n.offered_load_pps != 0.0) {
                throw std::invalid_argument("the receiver node must not originate traffic");
            }
        }
    }
    if (!receiver_found) throw std::invalid_argument("receiver id does not name a node");
}

bool channel_busy(const Scenario& s, const std::vector<Transmission>& active, int node_id,
                  double t) {
    const Node* me = nullptr;
    for (const Node& n : s.nodes) {
        if (n.id == node_id) me = &n;
    }
    if (me == nullptr) throw std::invalid_argument("unknown sensing node");
    const double sum = heard_energy(s, active, node_id, me->position_m, t, nullptr);
    return s.config.noise_energy + sum > busy_threshold(s.config);
}

int RunResult::total_sent() const {
    int n = 0;
    for (const NodeStats& s : per_node) n += s.sent;
    return n;
}

int RunResult::total_collided() const {
    int n = 0;
    for (const NodeStats& s : per_node) n += s.collided;
    return n;
}

double RunResult::collision_fraction() const {
    const int sent = total_sent();
    return sent == 0 ? 0.0 : static_cast<double>(total_collided()) / static_cast<double>(sent);
}

namespace {

enum : int { kEvArrival = 0, kEvTxEnd = 1, kEvSense = 2 };

struct Event {
    double t;
    int node_id;
    int kind;
};

struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
        if (a.t != b.t) return a.t > b.t;
        if (a.node_id != b.node_id) return a.node_id > b.node_id;
        return a.kind > b.kind;
    }
};

struct NodeState {
    const Node* def = nullptr;
    std::mt19937 rng;
    double sense_phase = 0.0;
    int pending = 0;
    bool contending = false;
    bool transmitting = false;
    double backoff_expiry = -1.0;
    std::set<size_t> counted;  // transmissions already charged against the wait
};

class Simulation {
  public:
    explicit Simulation(const Scenario& s) : scen_(s) {
        scen_.validate();
        const MacConfig& cfg = scen_.config;
        for (const Node& n : scen_.nodes) {
            NodeState st;
            st.def = &n;
            std::seed_seq seq{cfg.seed, static_cast<uint32_t>(n.id) + 0x9e37u};
            st.rng.seed(seq);
            // Independent devices do not share a clock: each node's sense
            // grid carries its own phase within the common period.
            std::uniform_real_distribution<double> phase(0.0, cfg.sense_period_s);
            st.sense_phase = phase(st.rng);
            states_[n.id] = std::move(st);
            if (n.id == cfg.receiver_id) receiver_pos_ = n.position_m;
        }
    }

    RunResult run() {
        const MacConfig& cfg = scen_.config;
        for (auto& [id, st] : states_) {
            if (st.def->offered_load_pps < 0.0) {
                push({0.0, id, kEvArrival});
            } else if (st.def->offered_load_pps > 0.0) {
                push({next_poisson_gap(st), id, kEvArrival});
            }
        }
        while (!heap_.empty()) {
            const Event ev = heap_.top();
            heap_.pop();
            NodeState& st = states_.at(ev.node_id);
            switch (ev.kind) {
                case kEvArrival:
                    if (ev.t > cfg.duration_s) break;
                    log(ev.t, ev.node_id, EventKind::arrival, 0.0);
                    st.pending += 1;
                    if (st.def->offered_load_pps > 0.0) {
                        const double next = ev.t + next_poisson_gap(st);
                        if (next <= cfg.duration_s) push({next, ev.node_id, kEvArrival});
                    }
                    try_begin(st, ev.t);
                    break;
                case kEvTxEnd:
                    st.transmitting = false;
                    log(ev.t, ev.node_id, EventKind::tx_end, 0.0);
                    if (st.def->offered_load_pps < 0.0 && ev.t <= cfg.duration_s) {
                        // Continuous load re-arms with a short random packet
                        // preparation time. Without it, rigid timing lets two
                        // senders whose sense grids differ by less than the
                        // sound flight time lock into transmitting forever in
                        // unison (each samples the channel just before the
                        // other's energy arrives) and lets a single sender
                        // monopolize a fixed-phase cycle that starves rivals
                        // whose grids miss its one idle gap. Real devices
                        // drift apart on their own.
                        std::uniform_real_distribution<double> prep(0.0, cfg.sense_period_s);
                        push({ev.t + prep(st.rng), ev.node_id, kEvArrival});
                    }
                    if (st.pending > 0) try_begin(st, ev.t);
                    break;
                case kEvSense:
                    if (!st.contending || st.transmitting) break;
                    if (ev.t > cfg.duration_s) {
                        st.contending = false;
                        break;
                    }
                    sense_tick(st, ev.t);
                    break;
                default:
                    break;
            }
        }
        return finish();
    }

  private:
    void push(const Event& e) { heap_.push(e); }

    void log(double t, int node, EventKind kind, double value) {
        result_.trace.push_back({t, node, kind, value});
    }

    double next_poisson_gap(NodeState& st) {
        std::exponential_distribution<double> gap(st.def->offered_load_pps);
        return gap(st.rng);
    }

    double next_tick(const NodeState& st, double t) const {
        const double period = scen_.config.sense_period_s;
        const double k = std::ceil((t - st.sense_phase) / period - kTimeEps);
        const double tick = st.sense_phase + std::max(0.0, k) * period;
        return tick < t - kTimeEps ? tick + period : tick;
    }

    void try_begin(NodeState& st, double t) {
        if (st.pending == 0 || st.transmitting || st.contending) return;
        if (!st.def->cs_enabled) {
            transmit(st, t);
            return;
        }
        st.contending = true;
        st.backoff_expiry = -1.0;
        st.counted.clear();
        push({next_tick(st, t), st.def->id, kEvSense});
    }

    void sense_tick(NodeState& st, double t) {
        const MacConfig& cfg = scen_.config;
        std::vector<size_t> heard;
        const double sum =
            heard_energy(scen_, transmissions_, st.def->id, st.def->position_m, t, &heard);
        const bool busy = cfg.noise_energy + sum > busy_threshold(cfg);
        if (busy) {
            log(t, st.def->id, EventKind::sense_busy, 0.0);
            if (st.backoff_expiry < 0.0) {
                std::uniform_int_distribution<int> mult(cfg.backoff_min_packets,
                                                        cfg.backoff_max_packets);
                st.backoff_expiry = t + mult(st.rng) * cfg.packet_duration_s;
                st.counted.insert(heard.begin(), heard.end());
                log(t, st.def->id, EventKind::backoff_set, st.backoff_expiry);
            } else {
                // One whole packet duration per transmission detected during
                // the wait, counted once per transmission.
                for (size_t idx : heard) {
                    if (st.counted.insert(idx).second) {
                        st.backoff_expiry += cfg.packet_duration_s;
                        log(t, st.def->id, EventKind::backoff_extend, st.backoff_expiry);
                    }
                }
            }
        } else {
            log(t, st.def->id, EventKind::sense_idle, 0.0);
            if (st.backoff_expiry < 0.0 || t >= st.backoff_expiry - kTimeEps) {
                st.contending = false;
                transmit(st, t);
                return;
            }
        }
        push({t + cfg.sense_period_s, st.def->id, kEvSense});
    }

    void transmit(NodeState& st, double t) {
        const MacConfig& cfg = scen_.config;
        const size_t idx = transmissions_.size();
        transmissions_.push_back({st.def->id, t, t + cfg.packet_duration_s});
        const double r = std::abs(st.def->position_m - receiver_pos_);
        result_.packets.push_back({st.def->id, t, t + r / cfg.sound_speed_mps, false});
        log(t, st.def->id, EventKind::tx_start, static_cast<double>(idx));
        push({t + cfg.packet_duration_s, st.def->id, kEvTxEnd});
        st.transmitting = true;
        st.pending -= 1;
    }

    RunResult finish() {
        const double T = scen_.config.packet_duration_s;
        std::vector<size_t> order(result_.packets.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            const PacketRecord& pa = result_.packets[a];
            const PacketRecord& pb = result_.packets[b];
            if (pa.rx_time_s != pb.rx_time_s) return pa.rx_time_s < pb.rx_time_s;
            return pa.node < pb.node;
        });
        for (size_t i = 1; i < order.size(); ++i) {
            PacketRecord& prev = result_.packets[order[i - 1]];
            PacketRecord& cur = result_.packets[order[i]];
            if (prev.node != cur.node && cur.rx_time_s - prev.rx_time_s < T) {
                prev.collided = true;
                cur.collided = true;
            }
        }
        for (const Node& n : scen_.nodes) {
            NodeStats stats;
            stats.node = n.id;
            for (const PacketRecord& p : result_.packets) {
                if (p.node != n.id) continue;
                stats.sent += 1;
                if (p.collided) stats.collided += 1;
            }
            result_.per_node.push_back(stats);
        }
        result_.packet_duration_s = T;
        return std::move(result_);
    }

    Scenario scen_;
    std::map<int, NodeState> states_;
    std::priority_queue<Event, std::vector<Event>, EventLater> heap_;
    std::vector<Transmission> transmissions_;
    RunResult result_;
    double receiver_pos_ = 0.0;
};

}  // namespace

RunResult run_network(const Scenario& s) { return Simulation(s).run(); }

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    Scenario s;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key)) continue;
        auto fail = [&](const std::string& what) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + what);
        };
        if (key == "duration") {
            if (!(ss >> s.config.duration_s)) fail("expected a duration in seconds");
        } else if (key == "seed") {
            if (!(ss >> s.config.seed)) fail("expected a seed");
        } else if (key == "packet_duration") {
            if (!(ss >> s.config.packet_duration_s)) fail("expected a packet duration");
        } else if (key == "sense_period") {
            if (!(ss >> s.config.sense_period_s)) fail("expected a sense period");
        } else if (key == "receiver") {
            if (!(ss >> s.config.receiver_id)) fail("expected a receiver node id");
        } else if (key == "noise") {
            if (!(ss >> s.config.noise_energy)) fail("expected a noise energy");
        } else if (key == "busy_over_noise") {
            if (!(ss >> s.config.busy_over_noise_db)) fail("expected a dB margin");
        } else if (key == "tx_energy") {
            if (!(ss >> s.config.tx_energy_1m)) fail("expected a transmit energy");
        } else if (key == "node") {
            Node n;
            std::string load, cs;
            if (!(ss >> n.id >> n.position_m >> load >> cs)) {
                fail("expected: node <id> <pos_m> <load|cont> <on|off>");
            }
            if (load == "cont" || load == "continuous") {
                n.offered_load_pps = -1.0;
            } else {
                try {
                    size_t used = 0;
                    n.offered_load_pps = std::stod(load, &used);
                    if (used != load.size()) throw std::invalid_argument(load);
                } catch (const std::exception&) {
                    fail("load must be a number or 'cont'");
                }
            }
            if (cs == "on") {
                n.cs_enabled = true;
            } else if (cs == "off") {
                n.cs_enabled = false;
            } else {
                fail("carrier sense flag must be 'on' or 'off'");
            }
            s.nodes.push_back(n);
        } else {
            fail("unknown directive '" + key + "'");
        }
    }
    s.validate();
    return s;
}

void save_csv(const RunResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write csv: " + path);
    out << "node,sent,collided,fraction\n";
    for (const NodeStats& s : r.per_node) {
        const double frac = s.sent == 0 ? 0.0 : static_cast<double>(s.collided) / s.sent;
        out << s.node << "," << s.sent << "," << s.collided << "," << frac << "\n";
    }
}

namespace {

const char* kind_name(EventKind k) {
    switch (k) {
        case EventKind::arrival: return "arrival";
        case EventKind::sense_busy: return "sense_busy";
        case EventKind::sense_idle: return "sense_idle";
        case EventKind::backoff_set: return "backoff_set";
        case EventKind::backoff_extend: return "backoff_extend";
        case EventKind::tx_start: return "tx_start";
        case EventKind::tx_end: return "tx_end";
    }
    return "?";
}

}  // namespace

void save_trace(const RunResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace: " + path);
    char buf[128];
    for (const TraceEvent& ev : r.trace) {
        std::snprintf(buf, sizeof(buf), "%.6f node %d %s %.6f", ev.time_s, ev.node,
                      kind_name(ev.kind), ev.value);
        out << buf << "\n";
    }
}

PhyRunResult run_full_phy(const std::vector<PhyNodeSpec>& senders, double receiver_pos_m,
                          const MacConfig& cfg, double duration_s) {
    cfg.validate();
    if (senders.empty()) throw std::invalid_argument("need at least one sender");
    if (duration_s <= 0.0) throw std::invalid_argument("duration must be positive");

    proto::ProtocolConfig base;
    const double fs = static_cast<double>(base.modem.sample_rate);
    const size_t n_samples = static_cast<size_t>(duration_s * fs);
    const size_t n_send = senders.size();
    const size_t sense_samples = static_cast<size_t>(cfg.sense_period_s * fs);
    const size_t packet_samples = static_cast<size_t>(cfg.packet_duration_s * fs);
    // Sample-level energy detection over a clean medium: anything audible
    // from tens of meters sits far above this floor.
    constexpr double kSenseRms = 1e-3;
    const Vec sense_taps = dsp::design_bandpass(128, 1000.0, 4000.0, fs);

    // One real machine per node; the receiver answers to id 0.
    std::vector<proto::Sender> machines;
    machines.reserve(n_send);
    std::vector<proto::ProtocolConfig> sender_cfgs(n_send, base);
    for (size_t i = 0; i < n_send; ++i) {
        sender_cfgs[i].local_id = static_cast<int>(i) + 1;
        sender_cfgs[i].dest_id = 0;
        machines.emplace_back(sender_cfgs[i]);
    }
    proto::ProtocolConfig rx_cfg = base;
    rx_cfg.local_id = 0;
    proto::Receiver receiver(rx_cfg);

    // Pairwise integer delays and inverse-distance amplitudes; node index
    // n_send is the receiver.
    std::vector<double> pos(n_send + 1);
    for (size_t i = 0; i < n_send; ++i) pos[i] = senders[i].position_m;
    pos[n_send] = receiver_pos_m;
    const size_t n_nodes = n_send + 1;
    std::vector<std::vector<size_t>> delay(n_nodes, std::vector<size_t>(n_nodes, 0));
    std::vector<std::vector<double>> gain(n_nodes, std::vector<double>(n_nodes, 0.0));
    for (size_t a = 0; a < n_nodes; ++a) {
        for (size_t b = 0; b < n_nodes; ++b) {
            if (a == b) continue;
            const double r = std::abs(pos[a] - pos[b]);
            if (r < 0.05) throw std::invalid_argument("nodes must be at least 5 cm apart");
            delay[a][b] = std::max<size_t>(1, static_cast<size_t>(
                                                  std::llround(r / cfg.sound_speed_mps * fs)));
            gain[a][b] = 1.0 / std::max(r, 1.0);
        }
    }

    struct SenderCtl {
        bool started = false;
        long long expiry = -1;  // backoff expiry in samples, -1 = no backoff yet
        bool prev_busy = false;
        std::mt19937 rng;
    };
    std::vector<SenderCtl> ctl(n_send);
    for (size_t i = 0; i < n_send; ++i) {
        std::seed_seq seq{cfg.seed, static_cast<uint32_t>(i) + 0x51u};
        ctl[i].rng.seed(seq);
    }

    std::vector<Vec> outs(n_nodes);
    for (auto& o : outs) o.reserve(n_samples);
    std::vector<Vec> sender_in(n_send);  // kept for the sensing windows
    for (auto& v : sender_in) v.reserve(n_samples);

    Vec one(1, 0.0);
    for (size_t s = 0; s < n_samples; ++s) {
        for (size_t x = 0; x < n_nodes; ++x) {
            double in = 0.0;
            for (size_t y = 0; y < n_nodes; ++y) {
                if (y == x) continue;
                const size_t d = delay[x][y];
                if (s >= d && s - d < outs[y].size()) in += gain[x][y] * outs[y][s - d];
            }
            one[0] = in;
            if (x < n_send) {
                sender_in[x].push_back(in);
                const Vec o = machines[x].step(one);
                outs[x].push_back(o[0]);
            } else {
                const Vec o = receiver.step(one);
                outs[x].push_back(o[0]);
            }
        }
        // Start-control decisions on each sender's own sense grid (phases a
        // quarter period apart: independent devices do not share a clock).
        for (size_t i = 0; i < n_send; ++i) {
            if (ctl[i].started) continue;
            const size_t want = static_cast<size_t>(senders[i].start_time_s * fs);
            if (!senders[i].cs_enabled) {
                if (s >= want) {
                    machines[i].start(senders[i].payload);
                    ctl[i].started = true;
                }
                continue;
            }
            const size_t phase = i * (sense_samples / 4);
            if (s < sense_samples || (s % sense_samples) != phase || s < want) continue;
            double energy = 0.0;
            const size_t w0 = sender_in[i].size() - sense_samples;
            Vec window(sender_in[i].begin() + static_cast<long>(w0), sender_in[i].end());
            const Vec band = dsp::filter_aligned(window, sense_taps);
            for (double v : band) energy += v * v;
            const double rms = std::sqrt(energy / static_cast<double>(band.size()));
            const bool busy = rms > kSenseRms;
            if (busy) {
                if (ctl[i].expiry < 0) {
                    std::uniform_int_distribution<int> mult(cfg.backoff_min_packets,
                                                            cfg.backoff_max_packets);
                    ctl[i].expiry = static_cast<long long>(s) +
                                    static_cast<long long>(mult(ctl[i].rng)) *
                                        static_cast<long long>(packet_samples);
                } else if (!ctl[i].prev_busy) {
                    // A fresh burst after silence reads as one more packet.
                    ctl[i].expiry += static_cast<long long>(packet_samples);
                }
            } else if (ctl[i].expiry < 0 || static_cast<long long>(s) >= ctl[i].expiry) {
                machines[i].start(senders[i].payload);
                ctl[i].started = true;
            }
            ctl[i].prev_busy = busy;
        }
    }

    PhyRunResult result;
    for (const auto& d : receiver.deliveries()) result.delivered.push_back(d.payload);
    for (size_t i = 0; i < n_send; ++i) result.sender_succeeded.push_back(machines[i].succeeded());
    return result;
}

}  // namespace uwm::mac
