// experiments.cpp - staged link trials, sweeps, and CSV reporting
#include "uwm/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include "uwm/adapt.hpp"
#include "uwm/dsp.hpp"
#include "uwm/phy.hpp"
#include "uwm/preamble.hpp"

namespace uwm::expt {

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double theory_ber(double snr_db) {
    const double snr = std::pow(10.0, snr_db / 10.0);
    return q_function(std::sqrt(2.0 * snr));
}

double coded_bitrate_bps(int band_width, const ModemConfig& m) {
    return band_width * (16.0 / 24.0) / m.symbol_duration_s();
}

double cp_overhead(const ModemConfig& m) {
    return static_cast<double>(m.cp_len()) / static_cast<double>(m.fft_size());
}

namespace {

// One derived stream per (experiment stage, trial): reports cannot depend on
// the order trials execute in.
uint32_t mix_seed(uint32_t seed, uint32_t salt, uint32_t trial) {
    std::seed_seq seq{seed, salt, trial};
    uint32_t out[1];
    seq.generate(out, out + 1);
    return out[0];
}

Vec padded(const Vec& x, size_t pre, size_t post) {
    Vec y(pre, 0.0);
    y.insert(y.end(), x.begin(), x.end());
    y.resize(y.size() + post, 0.0);
    return y;
}

// White-noise level giving the requested SNR per active bin, from the
// actual per-bin transmit amplitude and the FFT processing gain.
double sigma_for_bin_snr(const phy::TxConfig& cfg, double snr_db) {
    if (std::isinf(snr_db)) return 0.0;
    const double amp = phy::active_bin_amplitude(cfg);
    const double n = static_cast<double>(cfg.modem.fft_size());
    return amp / std::sqrt(n * std::pow(10.0, snr_db / 10.0));
}

void add_white(Vec& x, double sigma, uint32_t seed, size_t from = 0) {
    if (sigma <= 0.0) return;
    std::mt19937 rng(seed);
    std::normal_distribution<double> g(0.0, sigma);
    for (size_t i = from; i < x.size(); ++i) x[i] += g(rng);
}

Bits random_bits(size_t n, uint32_t seed) {
    std::mt19937 rng(seed);
    Bits b(n);
    for (auto& v : b) v = static_cast<uint8_t>(rng() & 1u);
    return b;
}

size_t count_bit_errors(const Bits& a, const Bits& b) {
    size_t e = 0;
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) e += a[i] != b[i];
    return e;
}

// Relative motion stretches the whole waveform in time. The receiver can see
// the stretch in the preamble itself: the eight repeated segments correlate
// at a lag of seven segment lengths, and any deviation of that peak from the
// nominal span is the stretch factor. Quadratic interpolation around the
// integer peak brings the estimate to a few parts per million, good enough
// to resample the stream back onto the transmit clock before demodulating.
double estimated_stretch(const Vec& y, const ModemConfig& m) {
    const size_t n = static_cast<size_t>(m.fft_size());
    const size_t span = 7 * n;
    const int slack = 60;
    if (y.size() < span + n + 2 * slack) return 1.0;
    std::vector<double> c(2 * slack + 1, 0.0);
    double best = -1.0;
    int best_d = 0;
    for (int d = -slack; d <= slack; ++d) {
        const size_t off = span + d;
        double acc = 0.0, e0 = 0.0, e1 = 0.0;
        for (size_t i = 0; i < n; ++i) {
            acc += y[i] * y[i + off];
            e0 += y[i] * y[i];
            e1 += y[i + off] * y[i + off];
        }
        const double v = std::abs(acc) / std::sqrt(std::max(e0 * e1, 1e-30));
        c[d + slack] = v;
        if (v > best) {
            best = v;
            best_d = d;
        }
    }
    double refined = best_d;
    if (best_d > -slack && best_d < slack) {
        const double cm = c[best_d - 1 + slack];
        const double c0 = c[best_d + slack];
        const double cp = c[best_d + 1 + slack];
        const double denom = cm - 2.0 * c0 + cp;
        if (std::abs(denom) > 1e-12) refined = best_d - 0.5 * (cp - cm) / denom;
    }
    return static_cast<double>(span) / (static_cast<double>(span) + refined);
}

constexpr int kPayloadBits = 16;

}  // namespace

// ---------------------------------------------------------------------------
// Link trials

double LinkReport::per() const {
    if (rows.empty()) return 0.0;
    int bad = 0;
    for (const auto& r : rows) bad += !r.packet_ok;
    return static_cast<double>(bad) / static_cast<double>(rows.size());
}

LinkReport run_link(const LinkSpec& spec) {
    spec.modem.validate();
    if (spec.trials < 1) throw std::invalid_argument("link: trials must be >= 1");
    const int nb = spec.modem.num_bins();
    if (spec.fixed_bins < 0 || spec.fixed_bins > nb) {
        throw std::invalid_argument("link: fixed band width outside the usable bins");
    }

    const pre::PreambleSpec pspec;
    const Vec preamble = pre::build_preamble(pspec, spec.modem);
    constexpr size_t kLead = 1024;  // quiet water before each transmission
    constexpr size_t kTail = 700;   // room for channel ringing

    LinkReport rep;
    const auto commit = [&](const LinkRow& row) {
        rep.rows.push_back(row);
        if (spec.on_row) spec.on_row(row);
    };
    for (int t = 0; t < spec.trials; ++t) {
        LinkRow row;
        row.trial = t;
        row.snr_db = spec.snr_db;

        chan::ChannelModel fwd;
        fwd.taps = spec.random_multipath
                       ? chan::draw_taps(spec.multipath, mix_seed(spec.seed, 101, t))
                       : spec.taps;
        fwd.snr_db = spec.snr_db;
        fwd.seed = mix_seed(spec.seed, 202, t);
        std::mt19937 rng(mix_seed(spec.seed, 303, t));
        const uint16_t payload = static_cast<uint16_t>(rng());

        // Band policy: measured and fed back, or preset with no negotiation.
        adapt::BandSelection rx_band{0, nb - 1, false};
        adapt::BandSelection tx_band = rx_band;
        if (spec.fixed_bins > 0) {
            rx_band = tx_band = {0, spec.fixed_bins - 1, false};
            row.feedback_ok = true;
        } else {
            // The opening preamble: detection plus per-bin measurement.
            const Vec rx1 = chan::apply_channel(padded(preamble, kLead, kTail), fwd);
            const auto det = pre::detect_and_sync(rx1, pspec, spec.modem);
            if (!det) {
                row.bit_errors = kPayloadBits;
                commit(row);
                continue;
            }
            row.detected = true;
            const auto snr = adapt::preamble_snr(rx1, det->sample_index, pspec, spec.modem);
            const auto sel = adapt::select_band(snr, spec.modem.snr_threshold_db,
                                                spec.modem.realloc_lambda);
            row.band_m = sel.m;
            row.band_n = sel.n;
            row.coded_bitrate_bps = coded_bitrate_bps(adapt::band_width(sel), spec.modem);

            // The selection rides back over the reverse water: same taps,
            // independent receiver noise.
            chan::ChannelModel rev = fwd;
            rev.seed = mix_seed(spec.seed, 404, t);
            const Vec fb = adapt::encode_feedback(sel, spec.modem);
            const Vec rxfb = chan::apply_channel(padded(fb, 256, kTail), rev);
            const auto dec = adapt::decode_feedback(rxfb, 0, rxfb.size(), spec.modem);
            row.feedback_ok = dec && dec->m == sel.m && dec->n == sel.n;
            if (!dec) {
                row.bit_errors = kPayloadBits;
                commit(row);
                continue;
            }
            // The transmitter obeys what it decoded; the receiver expects
            // what it selected. A feedback error surfaces as a band mismatch.
            tx_band = *dec;
            rx_band = sel;
        }

        // The data packet at the negotiated band, behind its own preamble.
        phy::TxConfig txc{spec.modem, tx_band, true};
        chan::ChannelModel fwd2 = fwd;
        fwd2.seed = mix_seed(spec.seed, 505, t);
        const Vec rx2 =
            chan::apply_channel(padded(phy::modulate_packet(payload, static_cast<uint32_t>(t), txc),
                                       kLead, kTail),
                                fwd2);
        const auto det2 = pre::detect_and_sync(rx2, pspec, spec.modem);
        if (spec.fixed_bins > 0) {
            row.detected = static_cast<bool>(det2);
            row.band_m = rx_band.m;
            row.band_n = rx_band.n;
            row.coded_bitrate_bps = coded_bitrate_bps(adapt::band_width(rx_band), spec.modem);
        }
        if (!det2) {
            row.bit_errors = kPayloadBits;
            commit(row);
            continue;
        }
        phy::TxConfig rxc{spec.modem, rx_band, true};
        const phy::DemodOptions opt;  // the full receive pipeline
        const auto res = phy::demodulate_packet(rx2, det2->sample_index, rxc, opt);
        if (res.ok) {
            row.bit_errors = std::popcount(static_cast<unsigned>(res.payload ^ payload));
            row.packet_ok = res.payload == payload;
        } else {
            row.bit_errors = kPayloadBits;
        }
        commit(row);
    }
    return rep;
}

void append_link_row(std::ostream& out, const LinkRow& row) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%d,%d,%.10g,%d,%d,%d,%d", row.trial, row.snr_db,
                  row.band_m, row.band_n, row.coded_bitrate_bps, row.detected ? 1 : 0,
                  row.feedback_ok ? 1 : 0, row.bit_errors, row.packet_ok ? 1 : 0);
    out << buf << "\n";
    out.flush();  // rows survive an interrupted run
}

void save_link_csv(const LinkReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << "trial,snr_db,band_m,band_n,coded_bitrate_bps,detected,feedback_ok,bit_errors,"
           "packet_ok\n";
    for (const auto& row : r.rows) append_link_row(out, row);
}

// ---------------------------------------------------------------------------
// BER sweep

std::vector<BerPoint> run_ber_sweep(const BerSweepSpec& spec) {
    spec.modem.validate();
    const int nb = spec.modem.num_bins();
    const adapt::BandSelection full{0, nb - 1, false};
    const size_t frame_bits = static_cast<size_t>(nb) * 40;

    std::vector<BerPoint> pts;
    for (size_t gi = 0; gi < spec.snr_grid_db.size(); ++gi) {
        BerPoint pt;
        pt.snr_db = spec.snr_grid_db[gi];

        // Theory-anchored uncoded measurement: absolute phase, genie timing,
        // clean preamble and training so only data decisions see the noise.
        phy::TxConfig anchor{spec.modem, full, false};
        phy::DemodOptions aopt;
        aopt.bandpass = false;
        aopt.equalize = false;
        aopt.differential = false;
        aopt.train_search = 0;
        const double sigma = sigma_for_bin_snr(anchor, pt.snr_db);
        const size_t data_from = static_cast<size_t>(spec.modem.fft_size()) * 8 +
                                 static_cast<size_t>(spec.modem.symbol_len());
        uint32_t frame = 0;
        while (pt.bits < spec.min_bits) {
            const Bits bits =
                random_bits(frame_bits, mix_seed(spec.seed, 160 + static_cast<uint32_t>(gi), frame));
            Vec sig = phy::modulate_frame(bits, anchor);
            add_white(sig, sigma, mix_seed(spec.seed, 260 + static_cast<uint32_t>(gi), frame),
                      data_from);
            const auto res = phy::demodulate_frame(sig, 0, frame_bits, anchor, aopt);
            if (!res.ok) throw std::runtime_error("ber sweep: demodulation failed");
            pt.bit_errors += count_bit_errors(bits, res.bits);
            pt.bits += frame_bits;
            ++frame;
        }
        pt.uncoded_ber = static_cast<double>(pt.bit_errors) / static_cast<double>(pt.bits);

        // Coded column: the real system (differential, equalized, soft) on
        // full packets at the same per-bin SNR, noise over everything.
        phy::TxConfig sys{spec.modem, full, true};
        const phy::DemodOptions sopt;
        const double ssigma = sigma_for_bin_snr(sys, pt.snr_db);
        for (int p = 0; p < spec.packets; ++p) {
            std::mt19937 rng(mix_seed(spec.seed, 360 + static_cast<uint32_t>(gi),
                                      static_cast<uint32_t>(p)));
            const uint16_t payload = static_cast<uint16_t>(rng());
            Vec sig = phy::modulate_packet(payload, static_cast<uint32_t>(p), sys);
            sig = padded(sig, 0, 256);
            add_white(sig, ssigma,
                      mix_seed(spec.seed, 460 + static_cast<uint32_t>(gi),
                               static_cast<uint32_t>(p)));
            const auto res = phy::demodulate_packet(sig, 0, sys, sopt);
            pt.packet_errors += !(res.ok && res.payload == payload);
            pt.packets += 1;
        }
        pt.coded_per = spec.packets == 0 ? 0.0
                                         : static_cast<double>(pt.packet_errors) /
                                               static_cast<double>(pt.packets);
        pts.push_back(pt);
    }
    return pts;
}

void save_ber_csv(const std::vector<BerPoint>& pts, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << "snr_db,bits,bit_errors,uncoded_ber,packets,packet_errors,coded_per\n";
    char buf[160];
    for (const auto& p : pts) {
        std::snprintf(buf, sizeof(buf), "%.10g,%zu,%zu,%.10g,%d,%d,%.10g", p.snr_db, p.bits,
                      p.bit_errors, p.uncoded_ber, p.packets, p.packet_errors, p.coded_per);
        out << buf << "\n";
        out.flush();
    }
}

BerPoint measure_link_ber(const ModemConfig& m, double snr_db, double doppler_hz,
                          size_t min_bits, uint32_t seed) {
    m.validate();
    const int nb = m.num_bins();
    phy::TxConfig cfg{m, {0, nb - 1, false}, true};
    const phy::DemodOptions opt;  // full pipeline, differential
    const size_t frame_bits = static_cast<size_t>(nb) * 40;
    const double sigma = sigma_for_bin_snr(cfg, snr_db);

    chan::ChannelModel ch;
    ch.doppler_hz = doppler_hz;

    BerPoint pt;
    pt.snr_db = snr_db;
    uint32_t frame = 0;
    while (pt.bits < min_bits) {
        const Bits bits = random_bits(frame_bits, mix_seed(seed, 560, frame));
        ch.seed = mix_seed(seed, 660, frame);
        Vec y = chan::apply_channel(padded(phy::modulate_frame(bits, cfg), 0, 400), ch);
        add_white(y, sigma, mix_seed(seed, 760, frame));
        const Vec z = dsp::resample(y, 1.0 / estimated_stretch(y, m));
        const auto res = phy::demodulate_frame(z, 0, frame_bits, cfg, opt);
        if (!res.ok) throw std::runtime_error("link ber probe: demodulation failed");
        pt.bit_errors += count_bit_errors(bits, res.bits);
        pt.bits += frame_bits;
        ++frame;
    }
    pt.uncoded_ber = static_cast<double>(pt.bit_errors) / static_cast<double>(pt.bits);
    return pt;
}

// ---------------------------------------------------------------------------
// Adaptive vs fixed bands

BandAdaptResult run_band_adapt(const BandAdaptSpec& spec) {
    LinkSpec base;
    base.modem = spec.modem;
    base.snr_db = spec.snr_db;
    base.trials = spec.trials;
    base.seed = spec.seed;
    base.random_multipath = true;
    base.multipath = spec.multipath;

    BandAdaptResult r;
    r.adaptive = run_link(base);
    for (int w : spec.fixed_widths) {
        LinkSpec fs = base;
        fs.fixed_bins = w;
        r.fixed.emplace_back(w, run_link(fs));
    }
    return r;
}

void save_band_adapt_csv(const BandAdaptResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << "system,band_width,trials,packet_errors,per\n";
    auto emit = [&](const std::string& name, int width, const LinkReport& rep) {
        int errors = 0;
        for (const auto& row : rep.rows) errors += !row.packet_ok;
        char buf[120];
        std::snprintf(buf, sizeof(buf), "%s,%d,%zu,%d,%.10g", name.c_str(), width,
                      rep.rows.size(), errors, rep.per());
        out << buf << "\n";
        out.flush();
    };
    emit("adaptive", 0, r.adaptive);
    for (const auto& [w, rep] : r.fixed) emit("fixed", w, rep);
}

// ---------------------------------------------------------------------------
// Mobility

double MobilityResult::diff_ber() const {
    return bits == 0 ? 0.0 : static_cast<double>(diff_errors) / static_cast<double>(bits);
}

double MobilityResult::coherent_ber() const {
    return bits == 0 ? 0.0 : static_cast<double>(coherent_errors) / static_cast<double>(bits);
}

MobilityResult run_mobility(const MobilitySpec& spec) {
    spec.modem.validate();
    const int nb = spec.modem.num_bins();
    phy::TxConfig diff{spec.modem, {0, nb - 1, false}, true};
    phy::TxConfig coh = diff;
    coh.differential = false;
    const double sigma = sigma_for_bin_snr(diff, spec.snr_db);

    MobilityResult r;
    for (int t = 0; t < spec.trials; ++t) {
        const Bits bits = random_bits(spec.bits_per_trial, mix_seed(spec.seed, 870, t));
        chan::ChannelModel m0;
        m0.taps = spec.taps;
        m0.seed = mix_seed(spec.seed, 970, t);

        // Identical water for both modulations: same drift path, same noise.
        for (int mode = 0; mode < 2; ++mode) {
            const phy::TxConfig& cfg = mode == 0 ? diff : coh;
            chan::TimeVaryingChannel tv(m0, spec.rate_hz, spec.depth);
            Vec y = tv.process(padded(phy::modulate_frame(bits, cfg), 0, 600));
            add_white(y, sigma, mix_seed(spec.seed, 1070, t));
            phy::DemodOptions opt;
            opt.differential = cfg.differential;
            const auto res = phy::demodulate_frame(y, 0, bits.size(), cfg, opt);
            if (!res.ok) throw std::runtime_error("mobility: demodulation failed");
            const size_t errs = count_bit_errors(bits, res.bits);
            if (mode == 0) {
                r.diff_errors += errs;
            } else {
                r.coherent_errors += errs;
            }
        }
        r.bits += bits.size();
    }
    return r;
}

void save_mobility_csv(const MobilityResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << "bits,diff_errors,coherent_errors,diff_ber,coherent_ber\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%.10g,%.10g", r.bits, r.diff_errors,
                  r.coherent_errors, r.diff_ber(), r.coherent_ber());
    out << buf << "\n";
}

// ---------------------------------------------------------------------------
// Subcarrier spacing

std::vector<SpacingPoint> run_spacing(const SpacingSpec& spec) {
    std::vector<SpacingPoint> pts;
    for (double sp : spec.spacings_hz) {
        SpacingPoint pt;
        pt.spacing_hz = sp;
        pts.push_back(pt);
    }

    for (int t = 0; t < spec.trials; ++t) {
        const auto taps = chan::draw_taps(spec.multipath, mix_seed(spec.seed, 1180, t));
        std::mt19937 rng(mix_seed(spec.seed, 1280, t));
        const uint16_t payload = static_cast<uint16_t>(rng());

        for (size_t si = 0; si < pts.size(); ++si) {
            ModemConfig m = spec.base;
            m.subcarrier_spacing = pts[si].spacing_hz;
            m.validate();
            phy::TxConfig sys{m, {0, m.num_bins() - 1, false}, true};

            chan::ChannelModel ch;
            ch.taps = taps;
            ch.snr_db = spec.snr_db;
            ch.seed = mix_seed(spec.seed, 1380 + static_cast<uint32_t>(si), t);

            const Vec rx = chan::apply_channel(
                padded(phy::modulate_packet(payload, static_cast<uint32_t>(t), sys), 512, 700),
                ch);
            const phy::DemodOptions opt;
            const auto res = phy::demodulate_packet(rx, 512, sys, opt);
            pts[si].packet_errors += !(res.ok && res.payload == payload);
            pts[si].trials += 1;
        }
    }
    for (auto& pt : pts) {
        pt.per = pt.trials == 0
                     ? 0.0
                     : static_cast<double>(pt.packet_errors) / static_cast<double>(pt.trials);
    }
    return pts;
}

void save_spacing_csv(const std::vector<SpacingPoint>& pts, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << "spacing_hz,trials,packet_errors,per\n";
    char buf[120];
    for (const auto& p : pts) {
        std::snprintf(buf, sizeof(buf), "%.10g,%d,%d,%.10g", p.spacing_hz, p.trials,
                      p.packet_errors, p.per);
        out << buf << "\n";
        out.flush();
    }
}

// ---------------------------------------------------------------------------
// Band stability

std::vector<StabilityRow> run_stability(const StabilitySpec& spec) {
    spec.modem.validate();
    const pre::PreambleSpec pspec;
    const Vec preamble = pre::build_preamble(pspec, spec.modem);
    phy::TxConfig full{spec.modem, {0, spec.modem.num_bins() - 1, false}, true};
    const double sigma = sigma_for_bin_snr(full, spec.snr_db);
    const size_t gap_samples =
        static_cast<size_t>(std::max(0.0, spec.gap_s) * spec.modem.sample_rate);

    std::vector<StabilityRow> rows;
    for (int t = 0; t < spec.trials; ++t) {
        chan::ChannelModel m0;
        m0.taps = spec.taps;
        m0.seed = mix_seed(spec.seed, 1490, t);
        chan::TimeVaryingChannel tv(m0, spec.rate_hz, spec.depth);

        Vec y1 = tv.process(padded(preamble, 0, 600));
        if (gap_samples > 0) tv.process(Vec(gap_samples, 0.0));
        Vec y2 = tv.process(padded(preamble, 0, 600));
        add_white(y1, sigma, mix_seed(spec.seed, 1590, t));
        add_white(y2, sigma, mix_seed(spec.seed, 1690, t));

        const auto snr1 = adapt::preamble_snr(y1, 0, pspec, spec.modem);
        const auto snr2 = adapt::preamble_snr(y2, 0, pspec, spec.modem);
        const auto sel = adapt::select_band(snr1, spec.modem.snr_threshold_db,
                                            spec.modem.realloc_lambda);

        StabilityRow row;
        row.trial = t;
        row.band_m = sel.m;
        row.band_n = sel.n;
        row.min_snr_first_db = *std::min_element(snr1.begin() + sel.m, snr1.begin() + sel.n + 1);
        row.min_snr_second_db = *std::min_element(snr2.begin() + sel.m, snr2.begin() + sel.n + 1);
        rows.push_back(row);
    }
    return rows;
}

void save_stability_csv(const std::vector<StabilityRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << "trial,band_m,band_n,min_snr_first_db,min_snr_second_db,reference_db\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.10g,%.10g,%.10g", r.trial, r.band_m,
                      r.band_n, r.min_snr_first_db, r.min_snr_second_db, kStabilityReferenceDb);
        out << buf << "\n";
        out.flush();
    }
}

// ---------------------------------------------------------------------------
// Beacon trials

std::vector<BeaconRow> run_beacon(const BeaconRunSpec& spec) {
    spec.config.validate();
    if (spec.trials < 1) throw std::invalid_argument("beacon: trials must be >= 1");

    std::vector<BeaconRow> rows;
    for (int t = 0; t < spec.trials; ++t) {
        std::mt19937 rng(mix_seed(spec.seed, 1790, t));
        BeaconRow row;
        row.trial = t;
        row.sent_id = static_cast<int>(rng() & 63u);

        chan::ChannelModel ch;
        ch.snr_db = spec.snr_db;
        ch.seed = mix_seed(spec.seed, 1890, t);
        const Vec rx = chan::apply_channel(
            padded(beacon::beacon_encode(row.sent_id, spec.config), 4096, 2048), ch);
        const auto dec = beacon::beacon_decode(rx, spec.config);
        row.decoded_id = dec ? *dec : -1;
        row.ok = dec && *dec == row.sent_id;
        rows.push_back(row);
    }
    return rows;
}

void save_beacon_csv(const std::vector<BeaconRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << "trial,sent_id,decoded_id,ok\n";
    for (const auto& r : rows) {
        out << r.trial << "," << r.sent_id << "," << r.decoded_id << "," << (r.ok ? 1 : 0)
            << "\n";
        out.flush();
    }
}

}  // namespace uwm::expt
