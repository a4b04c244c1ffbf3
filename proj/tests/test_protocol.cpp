// test_protocol.cpp - link handshake, addressing, feedback, data delivery, ACK
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>

#include "doctest.h"
#include "uwm/channel.hpp"
#include "uwm/dsp.hpp"
#include "uwm/preamble.hpp"
#include "uwm/protocol.hpp"

using namespace uwm;

namespace {

using Path = std::function<Vec(const Vec&)>;

Path passthrough() {
    return [](const Vec& v) { return v; };
}

// Drive a full-duplex exchange block by block until the sender settles.
void run_link(proto::Sender& alice, proto::Receiver& bob, const Path& fwd, const Path& bwd,
              int max_blocks = 400, size_t block = 512) {
    Vec a_in(block, 0.0);
    for (int i = 0; i < max_blocks; ++i) {
        const Vec a_out = alice.step(a_in);
        const Vec b_in = fwd(a_out);
        const Vec b_out = bob.step(b_in);
        a_in = bwd(b_out);
        if (alice.succeeded() || alice.failed()) break;
    }
}

void feed_blocks(proto::Receiver& bob, const Vec& stream, size_t block = 512) {
    for (size_t pos = 0; pos < stream.size(); pos += block) {
        const size_t n = std::min(block, stream.size() - pos);
        Vec chunk(stream.begin() + static_cast<long>(pos),
                  stream.begin() + static_cast<long>(pos + n));
        bob.step(chunk);
    }
}

}  // namespace

TEST_CASE("id symbols roundtrip for every address and put the tone where expected") {
    ModemConfig cfg;
    for (int id = 0; id < cfg.num_bins(); ++id) {
        const Vec sym = proto::encode_id_symbol(id, cfg);
        REQUIRE(sym.size() == static_cast<size_t>(cfg.symbol_len()));
        const auto got = proto::decode_id_symbol(sym, 0, cfg);
        REQUIRE(got.has_value());
        CHECK(*got == id);
    }
    // Address 0 concentrates its power at 1000 Hz.
    const Vec sym0 = proto::encode_id_symbol(0, cfg);
    const double at_1000 = dsp::goertzel_power(sym0, 67, 960, 1000.0, 48000.0);
    const double at_1050 = dsp::goertzel_power(sym0, 67, 960, 1050.0, 48000.0);
    const double at_2000 = dsp::goertzel_power(sym0, 67, 960, 2000.0, 48000.0);
    CHECK(at_1000 > 100.0 * at_1050);
    CHECK(at_1000 > 100.0 * at_2000);
    CHECK_THROWS(proto::encode_id_symbol(60, cfg));
    CHECK_THROWS(proto::encode_id_symbol(-1, cfg));
}

TEST_CASE("id decode tolerates timing slips of +/-20 samples") {
    ModemConfig cfg;
    Vec s(200, 0.0);
    const Vec sym = proto::encode_id_symbol(37, cfg);
    s.insert(s.end(), sym.begin(), sym.end());
    s.resize(s.size() + 200, 0.0);
    for (int d = -20; d <= 20; d += 5) {
        const auto got = proto::decode_id_symbol(s, static_cast<size_t>(200 + d), cfg);
        REQUIRE(got.has_value());
        CHECK(*got == 37);
    }
}

TEST_CASE("id decode reports absent without a dominant bin") {
    ModemConfig cfg;
    Vec silence(2000, 0.0);
    CHECK_FALSE(proto::decode_id_symbol(silence, 0, cfg).has_value());
    std::mt19937 rng(7);
    std::normal_distribution<double> g(0.0, 0.3);
    Vec noise(2000);
    for (double& v : noise) v = g(rng);
    CHECK_FALSE(proto::decode_id_symbol(noise, 0, cfg).has_value());
    CHECK_FALSE(proto::decode_id_symbol(noise, 1999, cfg).has_value());  // too short
}

TEST_CASE("id decode stays above 99% correct at 10 dB in-band SNR") {
    ModemConfig cfg;
    chan::ChannelModel m;
    m.noise.level_db = {0.0, 0.0, 0.0, 0.0, 0.0};
    m.snr_db = 10.0;
    int correct = 0;
    const int trials = 200;
    for (int i = 0; i < trials; ++i) {
        const int id = (i * 13) % 60;
        Vec s(500, 0.0);
        const Vec sym = proto::encode_id_symbol(id, cfg);
        s.insert(s.end(), sym.begin(), sym.end());
        s.resize(s.size() + 500, 0.0);
        m.seed = static_cast<uint32_t>(i + 1);
        const Vec y = chan::apply_channel(s, m);
        const auto got = proto::decode_id_symbol(y, 500, cfg);
        if (got && *got == id) ++correct;
    }
    CHECK(correct >= trials * 99 / 100);
}

TEST_CASE("ack detection finds the symbol and rejects noise") {
    ModemConfig cfg;
    Vec s(5000, 0.0);
    const Vec ack = proto::encode_ack_symbol(cfg);
    s.insert(s.end(), ack.begin(), ack.end());
    s.resize(s.size() + 3000, 0.0);
    const auto pos = proto::detect_ack(s, 0, s.size(), cfg);
    REQUIRE(pos.has_value());
    CHECK(*pos > 4000);
    CHECK(*pos < 5200);

    Vec silence(20000, 0.0);
    CHECK_FALSE(proto::detect_ack(silence, 0, silence.size(), cfg).has_value());
    std::mt19937 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    Vec noise(20000);
    for (double& v : noise) v = g(rng);
    CHECK_FALSE(proto::detect_ack(noise, 0, noise.size(), cfg).has_value());
    CHECK_THROWS(proto::detect_ack(noise, 0, noise.size() + 1, cfg));
}

TEST_CASE("reply timeout covers the round trip plus processing symbols") {
    proto::ProtocolConfig cfg;
    CHECK(cfg.reply_timeout_samples() == 1920 + 5 * 1027);
}

TEST_CASE("clean loopback delivers on the first attempt, every time") {
    for (int trial = 0; trial < 12; ++trial) {
        proto::ProtocolConfig pc;
        pc.local_id = 4;
        pc.dest_id = 9;
        proto::Sender alice(pc);
        proto::ProtocolConfig rc = pc;
        rc.local_id = 9;
        proto::Receiver bob(rc);
        const uint16_t payload = static_cast<uint16_t>(trial * 4799 + 123);
        alice.start(payload);
        run_link(alice, bob, passthrough(), passthrough());

        REQUIRE(alice.succeeded());
        CHECK(alice.attempts() == 1);
        REQUIRE(bob.deliveries().size() == 1);
        CHECK(bob.deliveries()[0].payload == payload);
        // Over the identity medium the far end accepts the whole band.
        CHECK(alice.negotiated_band().m == 0);
        CHECK(alice.negotiated_band().n == 59);
        CHECK(bob.selected_band().m == alice.negotiated_band().m);
        CHECK(bob.selected_band().n == alice.negotiated_band().n);
        // Data went out on the symbol grid anchored at the preamble start.
        CHECK((alice.data_start_time() - alice.preamble_start_time()) % 1027 == 0);
    }
}

TEST_CASE("a frame addressed elsewhere draws no reply at all") {
    proto::ProtocolConfig pc;
    pc.dest_id = 5;
    proto::Sender alice(pc);
    proto::ProtocolConfig rc = pc;
    rc.local_id = 7;  // not the destination
    proto::Receiver bob(rc);
    alice.start(0x1234);

    double bob_peak = 0.0;
    Vec a_in(512, 0.0);
    for (int i = 0; i < 400; ++i) {
        const Vec a_out = alice.step(a_in);
        const Vec b_out = bob.step(a_out);
        for (double v : b_out) bob_peak = std::max(bob_peak, std::abs(v));
        a_in = b_out;
        if (alice.failed()) break;
    }
    CHECK(bob_peak == 0.0);
    CHECK(bob.deliveries().empty());
    REQUIRE(alice.failed());
    CHECK(alice.attempts() == 3);
    CHECK(alice.diagnostic().find("feedback") != std::string::npos);
}

TEST_CASE("a lost feedback reply triggers exactly one preamble retransmission") {
    proto::ProtocolConfig pc;
    pc.local_id = 2;
    pc.dest_id = 11;
    proto::Sender alice(pc);
    proto::ProtocolConfig rc = pc;
    rc.local_id = 11;
    proto::Receiver bob(rc);
    alice.start(0xCAFE);

    const Path mute_first = [&](const Vec& v) {
        if (alice.attempts() <= 1) return Vec(v.size(), 0.0);
        return v;
    };
    run_link(alice, bob, passthrough(), mute_first, 600);

    REQUIRE(alice.succeeded());
    CHECK(alice.attempts() == 2);
    REQUIRE(bob.deliveries().size() == 1);
    CHECK(bob.deliveries()[0].payload == 0xCAFE);
    CHECK((alice.data_start_time() - alice.preamble_start_time()) % 1027 == 0);
}

TEST_CASE("a rejected payload is never acknowledged and the sender gives up") {
    proto::ProtocolConfig pc;
    pc.local_id = 0;
    pc.dest_id = 3;
    proto::Sender alice(pc);
    proto::ProtocolConfig rc = pc;
    rc.local_id = 3;
    proto::Receiver bob(rc);
    bob.ack_oracle = [](uint16_t) { return false; };
    alice.start(0xBEEF);
    run_link(alice, bob, passthrough(), passthrough(), 800);

    REQUIRE(alice.failed());
    CHECK(alice.attempts() == 3);
    CHECK(alice.diagnostic().find("acknowledgment") != std::string::npos);
    CHECK(bob.deliveries().empty());
}

TEST_CASE("band choice follows the forward path as measured at the far end") {
    // Forward path notches ~1500 Hz; backward path notches ~3000 Hz.  The
    // negotiated band must dodge the forward notch and is free to span the
    // backward one, proving the receiver-side measurement wins.
    chan::ChannelModel fwd_model;
    fwd_model.taps = {{0.0, 1.0}, {16.0, 0.95}};
    fwd_model.snr_db = 14.0;
    fwd_model.seed = 5;
    chan::ChannelModel bwd_model;
    bwd_model.taps = {{0.0, 1.0}, {8.0, 0.95}};

    proto::ProtocolConfig pc;
    pc.local_id = 1;
    // The addressee's one-hot tone (2400 Hz for id 28) must itself clear the
    // forward notch, or the handshake dies before band selection begins.
    pc.dest_id = 28;
    const Vec ref = pre::build_preamble(pc.preamble, pc.modem);
    chan::StreamingChannel fwd_ch(fwd_model, ref);
    chan::StreamingChannel bwd_ch(bwd_model, ref);

    proto::Sender alice(pc);
    proto::ProtocolConfig rc = pc;
    rc.local_id = 28;
    proto::Receiver bob(rc);
    alice.start(0x0F0F);
    run_link(
        alice, bob, [&](const Vec& v) { return fwd_ch.push(v); },
        [&](const Vec& v) { return bwd_ch.push(v); }, 600);

    REQUIRE(alice.succeeded());
    const auto band = alice.negotiated_band();
    CHECK(band.m == bob.selected_band().m);
    CHECK(band.n == bob.selected_band().n);
    CHECK(band.m >= 12);           // clear of the forward-path notch at bin 10
    CHECK(band.n == 59);
    CHECK(band.m <= 40);           // spans the backward-path notch at bin 40
    REQUIRE(bob.deliveries().size() == 1);
    CHECK(bob.deliveries()[0].payload == 0x0F0F);
}

TEST_CASE("training detection absorbs a few samples of inter-phase drift") {
    for (int drift : {-6, 6}) {
        proto::ProtocolConfig pc;
        pc.local_id = 6;
        proto::Receiver bob(pc);

        ModemConfig cfg;
        Vec s = pre::build_preamble(pc.preamble, cfg);
        s.resize(8 * 1027, 0.0);
        const Vec id_sym = proto::encode_id_symbol(6, cfg);
        s.insert(s.end(), id_sym.begin(), id_sym.end());
        // Training + data arrive on grid slot 12, slipped by a few samples as
        // if the range changed between the handshake and the data phase.
        phy::TxConfig tx;  // the clean-channel selection is the full band
        const Vec full = phy::modulate_packet(0xA5C3, 1, tx);
        const Vec body(full.begin() + 7680, full.end());
        s.resize(static_cast<size_t>(12 * 1027 + drift), 0.0);
        s.insert(s.end(), body.begin(), body.end());
        s.resize(s.size() + 6000, 0.0);

        feed_blocks(bob, s);
        REQUIRE(bob.deliveries().size() == 1);
        CHECK(bob.deliveries()[0].payload == 0xA5C3);
    }
}

TEST_CASE("the exchange survives a noisy multipath medium end to end") {
    chan::ChannelModel fwd_model;
    fwd_model.taps = {{0.0, 0.9}, {97.5, -0.35}, {250.0, 0.2}};
    fwd_model.snr_db = 16.0;
    fwd_model.seed = 21;
    chan::ChannelModel bwd_model;
    bwd_model.taps = {{0.0, 1.0}, {50.25, 0.3}};
    bwd_model.snr_db = 18.0;
    bwd_model.seed = 22;

    proto::ProtocolConfig pc;
    pc.local_id = 0;
    pc.dest_id = 12;
    const Vec ref = pre::build_preamble(pc.preamble, pc.modem);
    chan::StreamingChannel fwd_ch(fwd_model, ref);
    chan::StreamingChannel bwd_ch(bwd_model, ref);

    proto::Sender alice(pc);
    proto::ProtocolConfig rc = pc;
    rc.local_id = 12;
    proto::Receiver bob(rc);
    alice.start(0x7E57);
    run_link(
        alice, bob, [&](const Vec& v) { return fwd_ch.push(v); },
        [&](const Vec& v) { return bwd_ch.push(v); }, 800);

    REQUIRE(alice.succeeded());
    CHECK(alice.attempts() <= 2);
    REQUIRE(!bob.deliveries().empty());
    CHECK(bob.deliveries().back().payload == 0x7E57);
}

TEST_CASE("the message catalog loads with one index per line") {
    const auto catalog = proto::load_message_catalog(std::string(DATA_DIR) + "/messages.txt");
    REQUIRE(catalog.size() == 240);
    for (const auto& msg : catalog) CHECK_FALSE(msg.empty());

    const std::string tmp = "/tmp/uwm_catalog_test.txt";
    {
        std::ofstream out(tmp);
        out << "# header\n\nfirst message\nsecond message\n";
    }
    const auto small = proto::load_message_catalog(tmp);
    REQUIRE(small.size() == 2);
    CHECK(small[0] == "first message");
    CHECK(small[1] == "second message");
    std::remove(tmp.c_str());
    CHECK_THROWS(proto::load_message_catalog("/tmp/uwm_definitely_missing.txt"));
}

TEST_CASE("protocol configuration is validated") {
    proto::ProtocolConfig pc;
    pc.local_id = 60;
    CHECK_THROWS(proto::Sender{pc});
    pc.local_id = 0;
    pc.max_attempts = 0;
    CHECK_THROWS(proto::Receiver{pc});
}
