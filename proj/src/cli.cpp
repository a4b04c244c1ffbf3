// cli.cpp - command line front end over the experiment runners
#include "uwm/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwm/beacon.hpp"
#include "uwm/config.hpp"
#include "uwm/experiments.hpp"
#include "uwm/mac.hpp"
#include "uwm/phy.hpp"
#include "uwm/preamble.hpp"
#include "uwm/wav.hpp"

namespace uwm::cli {
namespace {

void usage(const char* why) {
    if (why && *why) std::fprintf(stderr, "error: %s\n", why);
    std::fprintf(stderr,
                 "usage: uwm_cli <command> [--flag value ...]\n"
                 "\n"
                 "commands:\n"
                 "  link        staged message trials (detect, adapt, feed back, decode)\n"
                 "  ber-sweep   uncoded BER vs SNR with a coded packet-error column\n"
                 "  band-adapt  adaptive band selection vs fixed bands over notched water\n"
                 "  mobility    differential vs absolute-phase decoding while moving\n"
                 "  spacing     packet error rate across subcarrier spacings\n"
                 "  stability   band quality at a later transmission vs when measured\n"
                 "  beacon      SOS tone-pair trials\n"
                 "  mac         shared-channel simulation from a scenario file\n"
                 "  wav-export  write a packet or beacon waveform to a wav file\n"
                 "  wav-import  decode a wav file recorded at the modem rate\n"
                 "\n"
                 "common flags: --config modem.json --trials N --seed N --snr DB --out FILE\n"
                 "run `uwm_cli <command> --help-flags x` to see a command's flags rejected\n"
                 "explicitly (unknown flags always fail loudly).\n");
}

struct Parsed {
    std::string cmd;
    std::map<std::string, std::string> kv;
};

Parsed parse(const std::vector<std::string>& args, const std::set<std::string>& allowed) {
    Parsed p;
    p.cmd = args[0];
    for (size_t i = 1; i < args.size(); ++i) {
        const std::string& flag = args[i];
        if (flag.rfind("--", 0) != 0) {
            throw std::invalid_argument(p.cmd + ": expected a --flag, got '" + flag + "'");
        }
        const std::string key = flag.substr(2);
        if (!allowed.count(key)) {
            throw std::invalid_argument(p.cmd + ": unknown flag --" + key);
        }
        if (i + 1 >= args.size()) {
            throw std::invalid_argument(p.cmd + ": --" + key + " needs a value");
        }
        p.kv[key] = args[++i];
    }
    return p;
}

std::string gets(const Parsed& p, const std::string& key, const std::string& fallback) {
    auto it = p.kv.find(key);
    return it == p.kv.end() ? fallback : it->second;
}

std::string require(const Parsed& p, const std::string& key) {
    auto it = p.kv.find(key);
    if (it == p.kv.end()) {
        throw std::invalid_argument(p.cmd + ": --" + key + " is required");
    }
    return it->second;
}

double getd(const Parsed& p, const std::string& key, double fallback) {
    auto it = p.kv.find(key);
    if (it == p.kv.end()) return fallback;
    try {
        size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(p.cmd + ": --" + key + " wants a number, got '" +
                                    it->second + "'");
    }
}

int geti(const Parsed& p, const std::string& key, int fallback) {
    const double v = getd(p, key, fallback);
    const int i = static_cast<int>(std::lround(v));
    if (std::abs(v - i) > 1e-9) {
        throw std::invalid_argument(p.cmd + ": --" + key + " wants an integer");
    }
    return i;
}

std::vector<double> get_list(const Parsed& p, const std::string& key,
                             std::vector<double> fallback) {
    auto it = p.kv.find(key);
    if (it == p.kv.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw std::invalid_argument(p.cmd + ": --" + key + " wants comma-separated numbers");
        }
    }
    if (out.empty()) {
        throw std::invalid_argument(p.cmd + ": --" + key + " wants comma-separated numbers");
    }
    return out;
}

ModemConfig modem_from(const Parsed& p) {
    auto it = p.kv.find("config");
    ModemConfig m = it == p.kv.end() ? ModemConfig{} : load_modem_config(it->second);
    m.validate();
    return m;
}

// Exports stay inside the wav clipping range without touching decodability.
Vec tamed(Vec x) {
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak > 0.95) {
        const double s = 0.95 / peak;
        for (double& v : x) v *= s;
    }
    return x;
}

int cmd_link(const Parsed& p) {
    expt::LinkSpec spec;
    spec.modem = modem_from(p);
    spec.snr_db = getd(p, "snr", spec.snr_db);
    spec.trials = geti(p, "trials", spec.trials);
    spec.seed = static_cast<uint32_t>(geti(p, "seed", 1));
    spec.fixed_bins = geti(p, "fixed-bins", 0);
    spec.random_multipath = geti(p, "multipath", 0) != 0;
    // Stream rows as trials finish so a killed run still leaves its rows.
    const std::string out = gets(p, "out", "link.csv");
    std::ofstream file(out);
    if (!file) throw std::runtime_error("cannot write report: " + out);
    file << "trial,snr_db,band_m,band_n,coded_bitrate_bps,detected,feedback_ok,bit_errors,"
            "packet_ok\n";
    file.flush();
    spec.on_row = [&file](const expt::LinkRow& row) { expt::append_link_row(file, row); };
    const auto rep = expt::run_link(spec);
    std::printf("link: %zu trials, packet error rate %.3f -> %s\n", rep.rows.size(), rep.per(),
                out.c_str());
    return 0;
}

int cmd_ber_sweep(const Parsed& p) {
    expt::BerSweepSpec spec;
    spec.modem = modem_from(p);
    spec.snr_grid_db = get_list(p, "snr-list", spec.snr_grid_db);
    spec.min_bits = static_cast<size_t>(geti(p, "bits", static_cast<int>(spec.min_bits)));
    spec.packets = geti(p, "packets", spec.packets);
    spec.seed = static_cast<uint32_t>(geti(p, "seed", 1));
    const auto pts = expt::run_ber_sweep(spec);
    const std::string out = gets(p, "out", "ber.csv");
    expt::save_ber_csv(pts, out);
    std::printf("ber-sweep: %zu SNR points -> %s\n", pts.size(), out.c_str());
    return 0;
}

int cmd_band_adapt(const Parsed& p) {
    expt::BandAdaptSpec spec;
    spec.modem = modem_from(p);
    spec.snr_db = getd(p, "snr", spec.snr_db);
    spec.trials = geti(p, "trials", spec.trials);
    spec.seed = static_cast<uint32_t>(geti(p, "seed", 1));
    const auto r = expt::run_band_adapt(spec);
    const std::string out = gets(p, "out", "band_adapt.csv");
    expt::save_band_adapt_csv(r, out);
    std::printf("band-adapt: adaptive PER %.3f over %d trials -> %s\n", r.adaptive.per(),
                spec.trials, out.c_str());
    return 0;
}

int cmd_mobility(const Parsed& p) {
    expt::MobilitySpec spec;
    spec.modem = modem_from(p);
    spec.rate_hz = getd(p, "rate", spec.rate_hz);
    spec.depth = getd(p, "depth", spec.depth);
    spec.snr_db = getd(p, "snr", spec.snr_db);
    spec.trials = geti(p, "trials", spec.trials);
    spec.bits_per_trial = static_cast<size_t>(
        geti(p, "bits", static_cast<int>(spec.bits_per_trial)));
    spec.seed = static_cast<uint32_t>(geti(p, "seed", 1));
    const auto r = expt::run_mobility(spec);
    const std::string out = gets(p, "out", "mobility.csv");
    expt::save_mobility_csv(r, out);
    std::printf("mobility: differential BER %.4f vs absolute-phase BER %.4f -> %s\n",
                r.diff_ber(), r.coherent_ber(), out.c_str());
    return 0;
}

int cmd_spacing(const Parsed& p) {
    expt::SpacingSpec spec;
    spec.base = modem_from(p);
    spec.snr_db = getd(p, "snr", spec.snr_db);
    spec.trials = geti(p, "trials", spec.trials);
    spec.seed = static_cast<uint32_t>(geti(p, "seed", 1));
    const auto pts = expt::run_spacing(spec);
    const std::string out = gets(p, "out", "spacing.csv");
    expt::save_spacing_csv(pts, out);
    std::printf("spacing: %zu spacings over %d trials -> %s\n", pts.size(), spec.trials,
                out.c_str());
    return 0;
}

int cmd_stability(const Parsed& p) {
    expt::StabilitySpec spec;
    spec.modem = modem_from(p);
    spec.rate_hz = getd(p, "rate", spec.rate_hz);
    spec.depth = getd(p, "depth", spec.depth);
    spec.gap_s = getd(p, "gap", spec.gap_s);
    spec.snr_db = getd(p, "snr", spec.snr_db);
    spec.trials = geti(p, "trials", spec.trials);
    spec.seed = static_cast<uint32_t>(geti(p, "seed", 1));
    const auto rows = expt::run_stability(spec);
    const std::string out = gets(p, "out", "stability.csv");
    expt::save_stability_csv(rows, out);
    std::printf("stability: %zu trials -> %s\n", rows.size(), out.c_str());
    return 0;
}

int cmd_beacon(const Parsed& p) {
    modem_from(p);  // --config is accepted everywhere; the beacon only validates it
    expt::BeaconRunSpec spec;
    spec.snr_db = getd(p, "snr", spec.snr_db);
    spec.trials = geti(p, "trials", spec.trials);
    spec.seed = static_cast<uint32_t>(geti(p, "seed", 1));
    const auto rows = expt::run_beacon(spec);
    int ok = 0;
    for (const auto& r : rows) ok += r.ok;
    const std::string out = gets(p, "out", "beacon.csv");
    expt::save_beacon_csv(rows, out);
    std::printf("beacon: %d/%zu ids recovered -> %s\n", ok, rows.size(), out.c_str());
    return 0;
}

int cmd_mac(const Parsed& p) {
    const auto scenario = mac::load_scenario(require(p, "scenario"));
    const auto result = mac::run_network(scenario);
    const std::string out = gets(p, "out", "mac.csv");
    mac::save_csv(result, out);
    if (p.kv.count("trace")) mac::save_trace(result, p.kv.at("trace"));
    std::printf("mac: %d packets sent, %d collided (%.1f%%) -> %s\n", result.total_sent(),
                result.total_collided(), 100.0 * result.collision_fraction(), out.c_str());
    return 0;
}

int cmd_wav_export(const Parsed& p) {
    const ModemConfig modem = modem_from(p);
    const std::string what = require(p, "what");
    const std::string out = require(p, "out");
    Vec sig;
    if (what == "packet") {
        const int payload = geti(p, "payload", -1);
        if (payload < 0 || payload > 0xffff) {
            throw std::invalid_argument("wav-export: --payload wants 0..65535");
        }
        phy::TxConfig cfg{modem, {0, modem.num_bins() - 1, false}, true};
        sig = phy::modulate_packet(static_cast<uint16_t>(payload), 0, cfg);
    } else if (what == "beacon") {
        const int id = geti(p, "id", -1);
        if (id < 0 || id > 63) throw std::invalid_argument("wav-export: --id wants 0..63");
        sig = beacon::beacon_encode(id, beacon::BeaconConfig{});
    } else {
        throw std::invalid_argument("wav-export: --what wants 'packet' or 'beacon'");
    }
    SampleBuffer buf;
    buf.samples = tamed(sig);
    buf.rate = modem.sample_rate;
    write_wav(out, buf);
    std::printf("wav-export: %s, %zu samples at %g Hz -> %s\n", what.c_str(),
                buf.samples.size(), buf.rate, out.c_str());
    return 0;
}

int cmd_wav_import(const Parsed& p) {
    const ModemConfig modem = modem_from(p);
    const SampleBuffer buf = read_wav(require(p, "path"));
    if (std::abs(buf.rate - modem.sample_rate) > 0.5) {
        std::fprintf(stderr, "error: wav-import: file is at %g Hz, the modem runs at %g Hz\n",
                     buf.rate, modem.sample_rate);
        return 2;
    }

    std::optional<uint16_t> payload;
    const pre::PreambleSpec pspec;
    if (const auto det = pre::detect_and_sync(buf.samples, pspec, modem)) {
        phy::TxConfig cfg{modem, {0, modem.num_bins() - 1, false}, true};
        const auto res = phy::demodulate_packet(buf.samples, det->sample_index, cfg, {});
        if (res.ok) payload = res.payload;
    }
    std::optional<int> beacon_id;
    if (!payload) beacon_id = beacon::beacon_decode(buf.samples, beacon::BeaconConfig{});

    if (p.kv.count("expect-payload")) {
        const int want = geti(p, "expect-payload", -1);
        if (!payload) {
            std::fprintf(stderr, "error: wav-import: no packet decoded\n");
            return 3;
        }
        if (*payload != want) {
            std::fprintf(stderr, "error: wav-import: decoded payload %u, expected %d\n",
                         static_cast<unsigned>(*payload), want);
            return 3;
        }
    }
    if (p.kv.count("expect-beacon")) {
        const int want = geti(p, "expect-beacon", -1);
        if (!beacon_id) {
            std::fprintf(stderr, "error: wav-import: no beacon decoded\n");
            return 3;
        }
        if (*beacon_id != want) {
            std::fprintf(stderr, "error: wav-import: decoded beacon id %d, expected %d\n",
                         *beacon_id, want);
            return 3;
        }
    }

    if (payload) {
        std::printf("wav-import: packet payload %u\n", static_cast<unsigned>(*payload));
    } else if (beacon_id) {
        std::printf("wav-import: beacon id %d\n", *beacon_id);
    } else {
        std::fprintf(stderr, "error: wav-import: nothing decodable in the file\n");
        return 4;
    }
    return 0;
}

const std::map<std::string, std::pair<std::set<std::string>, int (*)(const Parsed&)>>&
command_table() {
    static const std::map<std::string, std::pair<std::set<std::string>, int (*)(const Parsed&)>>
        table = {
            {"link",
             {{"config", "snr", "trials", "seed", "fixed-bins", "multipath", "out"}, cmd_link}},
            {"ber-sweep", {{"config", "snr-list", "bits", "packets", "seed", "out"},
                           cmd_ber_sweep}},
            {"band-adapt", {{"config", "snr", "trials", "seed", "out"}, cmd_band_adapt}},
            {"mobility",
             {{"config", "rate", "depth", "snr", "trials", "bits", "seed", "out"},
              cmd_mobility}},
            {"spacing", {{"config", "snr", "trials", "seed", "out"}, cmd_spacing}},
            {"stability",
             {{"config", "rate", "depth", "gap", "snr", "trials", "seed", "out"},
              cmd_stability}},
            {"beacon", {{"config", "snr", "trials", "seed", "out"}, cmd_beacon}},
            {"mac", {{"scenario", "out", "trace"}, cmd_mac}},
            {"wav-export", {{"config", "what", "payload", "id", "out"}, cmd_wav_export}},
            {"wav-import",
             {{"config", "path", "expect-payload", "expect-beacon"}, cmd_wav_import}},
        };
    return table;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    if (args.empty()) {
        usage("a command is required");
        return 1;
    }
    if (args[0] == "help" || args[0] == "--help" || args[0] == "-h") {
        usage(nullptr);
        return 0;
    }
    const auto it = command_table().find(args[0]);
    if (it == command_table().end()) {
        usage(("unknown command '" + args[0] + "'").c_str());
        return 1;
    }
    try {
        const Parsed p = parse(args, it->second.first);
        return it->second.second(p);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

}  // namespace uwm::cli
