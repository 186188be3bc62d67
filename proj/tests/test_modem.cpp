#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echoless/channel.hpp"
#include "echoless/errors.hpp"
#include "echoless/modem.hpp"
#include "echoless/stft.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace echoless;

namespace {

const double kPi = std::acos(-1.0);

std::vector<std::uint8_t> random_payload(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::uint8_t> p(n);
    for (auto& b : p) b = static_cast<std::uint8_t>(rng() & 0xFF);
    return p;
}

AudioBuffer with_lead(const AudioBuffer& x, std::size_t lead, std::size_t tail) {
    std::vector<double> v(lead, 0.0);
    v.insert(v.end(), x.samples().begin(), x.samples().end());
    v.resize(v.size() + tail, 0.0);
    return {std::move(v), x.sample_rate()};
}

// Bits as a string, for an independent view of the packing.
std::string bits_of(const std::vector<std::uint8_t>& bytes) {
    std::string s;
    for (auto b : bytes) {
        for (int i = 7; i >= 0; --i) s += ((b >> i) & 1) ? '1' : '0';
    }
    return s;
}

std::vector<double> tone(double f, std::size_t n, int rate, double amp = 0.5) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * kPi * f * static_cast<double>(i) / rate);
    return x;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace

TEST_CASE("built-in profiles") {
    for (const auto& p : {ProtocolProfile::audible(), ProtocolProfile::ultrasonic()}) {
        const auto f = p.tone_frequencies();
        REQUIRE(f.size() == 32);
        CHECK(f.front() == doctest::Approx(p.band_low));
        CHECK(f.back() == doctest::Approx(p.band_high));
        for (std::size_t i = 1; i < f.size(); ++i) {
            CHECK(f[i] - f[i - 1] == doctest::Approx((p.band_high - p.band_low) / 31.0));
            CHECK(f[i] - f[i - 1] >= 4.0 / p.symbol_duration);
        }
        CHECK_NOTHROW(p.validate(44100));
        CHECK_NOTHROW(p.validate(48000));
    }
    CHECK(ProtocolProfile::audible().band_low == 1700.0);
    CHECK(ProtocolProfile::audible().band_high == 10500.0);
    CHECK(ProtocolProfile::ultrasonic().band_low == 18000.0);
    CHECK(ProtocolProfile::ultrasonic().band_high == 20000.0);
    CHECK_THROWS_AS(ProtocolProfile::ultrasonic().validate(32000), InvalidArgument);
    CHECK_THROWS_AS(ProtocolProfile::by_name("loud"), InvalidArgument);

    auto crowded = ProtocolProfile::audible();
    crowded.band_high = crowded.band_low + 31.0 * 40.0;
    CHECK_THROWS_AS(crowded.validate(44100), InvalidArgument);
}

TEST_CASE("symbol packing is MSB-first over the whole payload") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
        const auto bytes = random_payload(rng, 1 + rng() % 16);
        const auto syms = pack_symbols(bytes);
        auto bits = bits_of(bytes);
        bits.resize((bits.size() + 4) / 5 * 5, '0');
        REQUIRE(syms.size() == bits.size() / 5);
        for (std::size_t i = 0; i < syms.size(); ++i) {
            CHECK(syms[i] == std::stoi(bits.substr(5 * i, 5), nullptr, 2));
        }
        std::vector<std::uint8_t> back;
        CHECK(unpack_symbols(syms, bytes.size(), back));
        CHECK(back == bytes);
    }
    std::vector<std::uint8_t> out;
    CHECK_FALSE(unpack_symbols(std::vector<Symbol>{0, 1}, 1, out));  // padding bit set
}

TEST_CASE("packet length arithmetic") {
    const auto p = ProtocolProfile::audible();
    const auto one = encode_packet(Packet{{0x00}}, p, 44100);
    CHECK(one.size() == (2 + 1 + 2 + 8) * p.symbol_samples(44100));
    CHECK(one.duration() == doctest::Approx(13 * 0.08).epsilon(1e-4));
    CHECK(peak_abs(one.samples()) <= 0.5 + 1e-12);
    CHECK(peak_abs(one.samples()) > 0.49);

    // 16 bytes need 26 data symbols, more than one 31-symbol block can carry
    const auto layout = PacketLayout::for_payload(16, 8);
    CHECK(layout.data_symbols == 26);
    CHECK(layout.block_data.size() == 2);
    CHECK(layout.total_symbols() == 3 + 26 + 16);

    CHECK_THROWS_AS(encode_packet(Packet{}, p, 44100), InvalidArgument);
    CHECK_THROWS_AS(encode_packet(Packet{std::vector<std::uint8_t>(17, 1)}, p, 44100), InvalidArgument);
    CHECK_THROWS_AS(encode_packet(Packet{{1}}, ProtocolProfile::ultrasonic(), 22050), InvalidArgument);
}

TEST_CASE("spectrogram peak tracks the tone sequence") {
    const auto p = ProtocolProfile::audible();
    const int rate = 44100;
    const Packet pkt{{0xDE, 0xAD, 0xBE, 0xEF}};
    const auto syms = packet_symbols(pkt, p);
    const auto audio = encode_packet(pkt, p, rate);
    // 1024-point frames fit inside one 3528-sample symbol
    const StftConfig cfg{1024, 64};
    const auto spec = stft(audio, cfg);
    const std::size_t s = p.symbol_samples(rate);
    for (std::size_t i = 0; i < syms.size(); ++i) {
        const std::size_t centre = i * s + s / 2;
        const std::size_t l = (centre - cfg.window_length / 2) / cfg.hop;
        std::size_t best = 0;
        for (std::size_t k = 1; k < spec.bins(); ++k) {
            if (std::abs(spec.at(k, l)) > std::abs(spec.at(best, l))) best = k;
        }
        const double expect = p.tone_frequency(syms[i]) * cfg.window_length / rate;
        CHECK(std::abs(static_cast<double>(best) - expect) <= 1.0);
    }
}

TEST_CASE("anechoic round trip over lengths, profiles and rates") {
    std::mt19937_64 rng(1234);
    int cases = 0;
    for (const auto& p : {ProtocolProfile::audible(), ProtocolProfile::ultrasonic()}) {
        for (int rate : {44100, 48000}) {
            for (std::size_t len = 1; len <= 16; ++len, ++cases) {
                const auto payload = random_payload(rng, len);
                const auto audio = with_lead(encode_packet(Packet{payload}, p, rate), rng() % 5000, 1000);
                const auto r = decode_packet(audio, p);
                REQUIRE(r.ok());
                CHECK(r.payload == payload);
                CHECK(r.corrected_errors == 0);
            }
        }
    }
    for (; cases < 100; ++cases) {
        const auto& p = cases % 2 ? ProtocolProfile::ultrasonic() : ProtocolProfile::audible();
        const auto payload = random_payload(rng, 1 + rng() % 16);
        const auto r = decode_packet(encode_packet(Packet{payload}, p, 48000), p);
        REQUIRE(r.ok());
        CHECK(r.payload == payload);
    }
}

TEST_CASE("preamble detection") {
    const auto p = ProtocolProfile::audible();
    const int rate = 44100;
    const std::size_t s = p.symbol_samples(rate);
    const auto pkt = encode_packet(Packet{{1, 2, 3, 4, 5, 6}}, p, rate);

    const auto clean = detect_preamble(with_lead(pkt, 12345, 4000), p);
    REQUIRE(clean.size() == 1);
    CHECK(std::abs(static_cast<double>(clean[0]) - 12345.0) <= static_cast<double>(s) / 8.0);

    CHECK(detect_preamble(AudioBuffer::silence(rate, rate), p).empty());
    CHECK(detect_preamble(AudioBuffer(oracle::white_noise(rate, 4, 0.1), rate), p).empty());

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ChannelSpec chan;
        RirSpec rir;
        rir.rt60 = 0.5;
        rir.seed = seed;
        chan.rir = rir;
        const auto rev = apply_channel(with_lead(pkt, 9000, 0), chan);
        const auto cands = detect_preamble(rev, p);
        REQUIRE_FALSE(cands.empty());
        CHECK(std::abs(static_cast<double>(cands[0]) - 9000.0) <= static_cast<double>(s) / 4.0);
    }
}

TEST_CASE("demodulating single tones and tone pairs") {
    const auto p = ProtocolProfile::audible();
    const int rate = 44100;
    const std::size_t s = p.symbol_samples(rate);
    for (int i = 0; i < 32; ++i) {
        const std::vector<Symbol> one{static_cast<Symbol>(i)};
        const AudioBuffer x(synthesize_symbols(one, p, rate), rate);
        const auto d = demodulate_symbols(x, 0, 1, p);
        CHECK(d.symbols[0] == i);
        CHECK(d.confidences[0] > 10.0);
    }
    auto a = tone(p.tone_frequency(3), s, rate, 0.25);
    const auto b = tone(p.tone_frequency(20), s, rate, 0.25);
    for (std::size_t n = 0; n < s; ++n) a[n] += b[n];
    const auto d = demodulate_symbols(AudioBuffer(a, rate), 0, 1, p);
    CHECK(d.confidences[0] == doctest::Approx(1.0).epsilon(0.05));
    CHECK((d.symbols[0] == 3 || d.symbols[0] == 20));

    CHECK_THROWS_AS(demodulate_symbols(AudioBuffer(a, rate), 0, 2, p), InvalidArgument);
}

TEST_CASE("tone in white noise at 0 dB SNR") {
    const auto p = ProtocolProfile::audible();
    const int rate = 44100;
    const std::size_t s = p.symbol_samples(rate);
    std::mt19937_64 rng(8);
    int correct = 0;
    for (int t = 0; t < 100; ++t) {
        const auto sym = static_cast<Symbol>(rng() % 32);
        auto x = tone(p.tone_frequency(sym), s, rate);
        const double sigma = 0.5 / std::sqrt(2.0);  // noise power = tone power
        const auto n = oracle::white_noise(s, rng(), sigma);
        for (std::size_t i = 0; i < s; ++i) x[i] += n[i];
        correct += demodulate_symbols(AudioBuffer(x, rate), 0, 1, p).symbols[0] == sym ? 1 : 0;
    }
    CHECK(correct >= 95);
}

TEST_CASE("added noise lowers mean confidence") {
    const auto p = ProtocolProfile::audible();
    const int rate = 44100;
    std::mt19937_64 rng(21);
    int lower = 0;
    for (int t = 0; t < 100; ++t) {
        const auto payload = random_payload(rng, 1 + rng() % 16);
        const auto clean = encode_packet(Packet{payload}, p, rate);
        const auto count = PacketLayout::for_payload(payload.size(), p.rs_parity).total_symbols();
        const double base = mean(demodulate_symbols(clean, 0, count, p).confidences);
        auto noisy = clean.vector();
        const auto n = oracle::white_noise(noisy.size(), rng(), 0.01 + 0.002 * static_cast<double>(rng() % 50));
        for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += n[i];
        const double after = mean(demodulate_symbols(AudioBuffer(noisy, rate), 0, count, p).confidences);
        lower += after <= base ? 1 : 0;
    }
    CHECK(lower == 100);
}

TEST_CASE("fault injection at the symbol layer") {
    const auto p = ProtocolProfile::audible();
    std::mt19937_64 rng(55);
    for (std::size_t len : {4u, 8u, 14u, 16u}) {
        const Packet pkt{random_payload(rng, len)};
        const auto syms = packet_symbols(pkt, p);
        const auto layout = PacketLayout::for_payload(len, p.rs_parity);
        const std::vector<Symbol> body(syms.begin() + 3, syms.end());
        const std::vector<double> sure(body.size(), 100.0);
        // t flips inside the first block, t = 0..4
        for (int t = 0; t <= 4; ++t) {
            auto hit = body;
            for (int i = 0; i < t; ++i) hit[static_cast<std::size_t>(2 * i)] ^= 0x11;
            const auto r = decode_symbols(syms[2], hit, sure, p);
            REQUIRE(r.ok());
            CHECK(r.payload == pkt.payload);
            CHECK(r.corrected_errors == t);
        }
        // mixed errors and low-confidence erasures, 2e + f <= parity per block
        for (int trial = 0; trial < 25; ++trial) {
            auto hit = body;
            auto conf = sure;
            std::size_t offset = 0;
            int budget_used = 0;
            for (std::size_t blk = 0; blk < layout.block_data.size(); ++blk) {
                const std::size_t n = layout.block_data[blk] + static_cast<std::size_t>(p.rs_parity);
                std::vector<std::size_t> idx(n);
                std::iota(idx.begin(), idx.end(), offset);
                std::shuffle(idx.begin(), idx.end(), rng);
                const int e = static_cast<int>(rng() % 5);
                const int f = static_cast<int>(rng() % static_cast<unsigned>(p.rs_parity - 2 * e + 1));
                for (int i = 0; i < e; ++i) hit[idx[static_cast<std::size_t>(i)]] ^= static_cast<Symbol>(1 + rng() % 31);
                for (int i = e; i < e + f; ++i) conf[idx[static_cast<std::size_t>(i)]] = 1.1;
                budget_used += 2 * e + f;
                offset += n;
            }
            const auto r = decode_symbols(syms[2], hit, conf, p);
            REQUIRE(r.ok());
            CHECK(r.payload == pkt.payload);
            CHECK(2 * r.corrected_errors + r.erasures_used <= budget_used);
        }
    }
}

TEST_CASE("decode failures are distinguishable") {
    const auto p = ProtocolProfile::audible();
    const int rate = 44100;
    CHECK(decode_packet(AudioBuffer::silence(rate, rate), p).status == DecodeStatus::no_preamble);

    const Packet pkt{{9, 8, 7}};
    const auto syms = packet_symbols(pkt, p);
    const std::vector<Symbol> body(syms.begin() + 3, syms.end());
    const std::vector<double> conf(body.size(), 50.0);
    CHECK(decode_symbols(0, body, conf, p).status == DecodeStatus::length_symbol_invalid);
    CHECK(decode_symbols(17, body, conf, p).status == DecodeStatus::length_symbol_invalid);

    auto broken = body;
    for (std::size_t i = 0; i < 6; ++i) broken[i] ^= 0x0F;
    CHECK(decode_symbols(syms[2], broken, conf, p).status == DecodeStatus::fec_failure);

    // preamble and length intact, body replaced by a constant tone
    std::vector<Symbol> wrong(syms.begin(), syms.begin() + 3);
    wrong.resize(syms.size(), 13);
    const AudioBuffer garbled(synthesize_symbols(wrong, p, rate), rate);
    CHECK(decode_packet(garbled, p).status == DecodeStatus::fec_failure);

    CHECK(to_string(DecodeStatus::ok) == "ok");
    CHECK(to_string(DecodeStatus::no_preamble) == "no-preamble");
    CHECK(to_string(DecodeStatus::length_symbol_invalid) == "length-symbol-invalid");
    CHECK(to_string(DecodeStatus::fec_failure) == "fec-failure");
}
