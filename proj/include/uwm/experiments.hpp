// experiments.hpp - measurement harness: link trials, sweeps, stability runs
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "uwm/beacon.hpp"
#include "uwm/channel.hpp"
#include "uwm/config.hpp"
#include "uwm/types.hpp"

namespace uwm::expt {

// Gaussian tail probability Q(x) and the coherent binary phase-keying error
// rate Q(sqrt(2*snr)) it induces, with snr as a linear ratio of per-bin
// signal power to per-bin noise power (argument in dB).
double q_function(double x);
double theory_ber(double snr_db);

// Coded data rate for a band of the given width: one bit per active bin per
// symbol, times the 16/24 code rate, over the prefixed symbol duration.
double coded_bitrate_bps(int band_width, const ModemConfig& m);
// Fraction of each symbol spent on the cyclic prefix.
double cp_overhead(const ModemConfig& m);

// ---------------------------------------------------------------------------
// Link trials: the staged sender/receiver exchange over a simulated channel.
// Each trial plays the whole sequence -- preamble, band measurement and
// selection (or a fixed band), the feedback tone over the reverse channel,
// then the data packet at the negotiated band -- and records one report row.
// Trials derive their randomness from (seed, trial), so the report does not
// depend on execution order.

struct LinkRow;

struct LinkSpec {
    ModemConfig modem;
    double snr_db = 12.0;  // in-band at the receiver; +inf = noiseless
    int trials = 100;
    uint32_t seed = 1;
    // 0 selects the adaptive negotiation; otherwise the first fixed_bins bins
    // are used with no measurement or feedback stage.
    int fixed_bins = 0;
    // Fresh multipath per trial (paired across specs sharing seed/trial), or
    // the fixed tap set below for every trial.
    bool random_multipath = false;
    chan::MultipathParams multipath;
    std::vector<chan::Tap> taps{{0.0, 1.0}};
    // Invoked after each trial in trial order, so a report can be streamed
    // to disk as it grows and survive an interrupted run.
    std::function<void(const LinkRow&)> on_row;
};

struct LinkRow {
    int trial = 0;
    double snr_db = 0.0;
    int band_m = 0;
    int band_n = 0;
    double coded_bitrate_bps = 0.0;
    bool detected = false;
    bool feedback_ok = false;
    int bit_errors = 0;
    bool packet_ok = false;
};

struct LinkReport {
    std::vector<LinkRow> rows;
    double per() const;  // fraction of trials whose packet failed
};

LinkReport run_link(const LinkSpec& spec);
// One formatted report row (no header, no newline handling beyond the one
// terminator); save_link_csv and streamed reports share it byte for byte.
void append_link_row(std::ostream& out, const LinkRow& row);
void save_link_csv(const LinkReport& r, const std::string& path);

// ---------------------------------------------------------------------------
// Bit-error-rate sweep over white noise at calibrated per-bin SNR.
// The uncoded column is the theory-anchored measurement: absolute-phase
// keying, genie timing, and noise applied only past the training symbol so
// the phase reference stays clean -- the measured curve is then comparable
// to theory_ber. The coded column runs the real pipeline (differential,
// equalized, soft decisions) on full packets at the same per-bin SNR.

struct BerSweepSpec {
    ModemConfig modem;
    std::vector<double> snr_grid_db{0, 2, 4, 6, 8, 10};
    size_t min_bits = 100000;  // uncoded bits per grid point
    int packets = 50;          // coded packets per grid point
    uint32_t seed = 1;
};

struct BerPoint {
    double snr_db = 0.0;
    size_t bits = 0;
    size_t bit_errors = 0;
    double uncoded_ber = 0.0;
    int packets = 0;
    int packet_errors = 0;
    double coded_per = 0.0;
};

std::vector<BerPoint> run_ber_sweep(const BerSweepSpec& spec);
void save_ber_csv(const std::vector<BerPoint>& pts, const std::string& path);

// One-point uncoded probe with the system's own modulation (differential,
// full receive pipeline, noise over the whole stream) plus an optional
// carrier offset -- the mobility-tolerance measurement.
BerPoint measure_link_ber(const ModemConfig& m, double snr_db, double doppler_hz,
                          size_t min_bits, uint32_t seed);

// ---------------------------------------------------------------------------
// Adaptive-versus-fixed comparison over randomized notched channels. All
// systems replay the identical per-trial channel and noise (paired
// realizations); only the band policy differs.

struct BandAdaptSpec {
    ModemConfig modem;
    double snr_db = 12.0;
    int trials = 200;
    uint32_t seed = 1;
    chan::MultipathParams multipath;
    std::vector<int> fixed_widths{60, 30, 10};
};

struct BandAdaptResult {
    LinkReport adaptive;
    std::vector<std::pair<int, LinkReport>> fixed;  // band width -> report
};

BandAdaptResult run_band_adapt(const BandAdaptSpec& spec);
void save_band_adapt_csv(const BandAdaptResult& r, const std::string& path);

// ---------------------------------------------------------------------------
// Moving-water comparison: the same bits and the same channel evolution,
// demodulated once with differential decoding and once with absolute phase.

struct MobilitySpec {
    ModemConfig modem;
    double rate_hz = 2.0;  // tap-drift rate; 0 freezes the channel
    double depth = 0.5;
    double snr_db = 20.0;
    int trials = 8;
    size_t bits_per_trial = 1200;
    uint32_t seed = 1;
    // Multi-tap set whose drifting gains turn the per-bin phases.
    std::vector<chan::Tap> taps{{0.0, 1.0}, {41.0, 0.6}, {97.0, -0.35}};
};

struct MobilityResult {
    size_t bits = 0;
    size_t diff_errors = 0;
    size_t coherent_errors = 0;
    double diff_ber() const;
    double coherent_ber() const;
};

MobilityResult run_mobility(const MobilitySpec& spec);
void save_mobility_csv(const MobilityResult& r, const std::string& path);

// ---------------------------------------------------------------------------
// Subcarrier-spacing study on a long echoed path at low SNR: the same
// per-trial tap draw and payloads, rerun at each requested spacing.

struct SpacingSpec {
    ModemConfig base;  // spacing is overridden per grid point
    std::vector<double> spacings_hz{50.0, 25.0, 10.0};
    double snr_db = 6.0;
    int trials = 30;
    uint32_t seed = 1;
    // Delay spread well past the 50 Hz prefix, inside the equalizer budget.
    chan::MultipathParams multipath{3, 5, 150.0, 420.0, 12.0, 8.0, 14.0};
};

struct SpacingPoint {
    double spacing_hz = 0.0;
    int trials = 0;
    int packet_errors = 0;
    double per = 0.0;
};

std::vector<SpacingPoint> run_spacing(const SpacingSpec& spec);
void save_spacing_csv(const std::vector<SpacingPoint>& pts, const std::string& path);

// ---------------------------------------------------------------------------
// Band-stability study: pick the band from a first preamble, let the water
// evolve for gap_s, then re-measure the minimum SNR inside that band at a
// second preamble. The 4 dB usability reference is recorded with each row.

constexpr double kStabilityReferenceDb = 4.0;

struct StabilitySpec {
    ModemConfig modem;
    double rate_hz = 0.0;
    double depth = 0.5;
    double gap_s = 1.0;
    double snr_db = 15.0;
    int trials = 50;
    uint32_t seed = 1;
    std::vector<chan::Tap> taps{{0.0, 1.0}, {41.0, 0.6}, {97.0, -0.35}};
};

struct StabilityRow {
    int trial = 0;
    int band_m = 0;
    int band_n = 0;
    double min_snr_first_db = 0.0;
    double min_snr_second_db = 0.0;
};

std::vector<StabilityRow> run_stability(const StabilitySpec& spec);
void save_stability_csv(const std::vector<StabilityRow>& rows, const std::string& path);

// ---------------------------------------------------------------------------
// Distress-beacon trials: random identities through the shaped-noise channel.

struct BeaconRunSpec {
    beacon::BeaconConfig config;
    double snr_db = 0.0;  // in the 1-4 kHz band; +inf = noiseless
    int trials = 20;
    uint32_t seed = 1;
};

struct BeaconRow {
    int trial = 0;
    int sent_id = 0;
    int decoded_id = -1;  // -1 = decoder reported nothing
    bool ok = false;
};

std::vector<BeaconRow> run_beacon(const BeaconRunSpec& spec);
void save_beacon_csv(const std::vector<BeaconRow>& rows, const std::string& path);

}  // namespace uwm::expt
