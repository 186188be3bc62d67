#include "echoless/modem.hpp"

#include "echoless/errors.hpp"
#include "echoless/tone_bank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace echoless {

namespace {

constexpr double kRampSeconds = 0.005;
constexpr double kToneAmplitude = 0.5;

std::size_t detection_hop(std::size_t symbol) { return std::max<std::size_t>(1, (symbol + 4) / 8); }

std::size_t guard_samples(std::size_t symbol) { return (symbol + 5) / 10; }

double median_excluding(std::span<const double> mags, std::size_t skip, std::vector<double>& scratch) {
    scratch.clear();
    for (std::size_t i = 0; i < mags.size(); ++i) {
        if (i != skip) scratch.push_back(mags[i]);
    }
    const auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(scratch.size() / 2);
    std::nth_element(scratch.begin(), mid, scratch.end());
    if (scratch.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(scratch.begin(), mid);
    return 0.5 * (lower + upper);
}

bool dominates(double value, double median, double ratio) {
    return value > 0.0 && value > ratio * median;
}

// True when tone `want` is the strongest, ignoring tone `other`.
bool strongest(std::span<const double> mags, std::size_t want, std::size_t other) {
    for (std::size_t i = 0; i < mags.size(); ++i) {
        if (i != want && i != other && mags[i] >= mags[want]) return false;
    }
    return true;
}

struct Receiver {
    const ProtocolProfile& profile;
    std::size_t symbol;
    ToneCorrelator tones;

    Receiver(const AudioBuffer& buf, const ProtocolProfile& p)
        : profile(p), symbol(p.symbol_samples(buf.sample_rate())),
          tones(buf.samples(), buf.sample_rate(), p.tone_frequencies(), detection_hop(symbol)) {}

    [[nodiscard]] double preamble_score(std::size_t offset) const {
        return tones.magnitude(profile.preamble[0], offset, offset + symbol) +
               tones.magnitude(profile.preamble[1], offset + symbol, offset + 2 * symbol);
    }

    [[nodiscard]] std::vector<std::size_t> detect(double ratio) const {
        const std::size_t n = tones.signal_length();
        if (n < 2 * symbol) return {};
        const std::size_t hop = detection_hop(symbol);
        const std::size_t count = static_cast<std::size_t>(profile.tone_count);
        std::vector<double> mags_a(count);
        std::vector<double> mags_b(count);
        std::vector<double> scratch;
        scratch.reserve(count);

        struct Hit {
            std::size_t offset;
            double score;
        };
        std::vector<Hit> hits;
        for (std::size_t o = 0; o + 2 * symbol <= n; o += hop) {
            tones.magnitudes(o, o + symbol, mags_a);
            const std::size_t pa = profile.preamble[0];
            const std::size_t pb = profile.preamble[1];
            if (!dominates(mags_a[pa], median_excluding(mags_a, pa, scratch), ratio)) continue;
            if (!strongest(mags_a, pa, pb)) continue;
            tones.magnitudes(o + symbol, o + 2 * symbol, mags_b);
            if (!dominates(mags_b[pb], median_excluding(mags_b, pb, scratch), ratio)) continue;
            if (!strongest(mags_b, pb, pa)) continue;
            hits.push_back({o, mags_a[pa] + mags_b[pb]});
        }

        // One representative per run of qualifying offsets, then refine on a finer grid.
        std::vector<std::size_t> onsets;
        std::size_t i = 0;
        while (i < hits.size()) {
            std::size_t best = i;
            std::size_t j = i + 1;
            while (j < hits.size() && hits[j].offset - hits[j - 1].offset <= symbol) {
                if (hits[j].score > hits[best].score) best = j;
                ++j;
            }
            const std::size_t center = hits[best].offset;
            const std::size_t fine = std::max<std::size_t>(1, hop / 8);
            const std::size_t lo = center >= hop ? center - hop : 0;
            const std::size_t hi = std::min(center + hop, n - 2 * symbol);
            std::size_t refined = center;
            double refined_score = hits[best].score;
            for (std::size_t o = lo; o <= hi; o += fine) {
                const double s = preamble_score(o);
                if (s > refined_score) {
                    refined_score = s;
                    refined = o;
                }
            }
            if (onsets.empty() || refined >= onsets.back() + symbol) onsets.push_back(refined);
            i = j;
        }
        return onsets;
    }

    [[nodiscard]] Demodulated demodulate(std::size_t start, std::size_t count) const {
        const std::size_t guard = guard_samples(symbol);
        if (count > 0 && start + count * symbol - guard > tones.signal_length()) {
            throw InvalidArgument("demodulation window runs past the end of the buffer");
        }
        Demodulated out;
        out.symbols.reserve(count);
        out.confidences.reserve(count);
        std::vector<double> mags(static_cast<std::size_t>(profile.tone_count));
        for (std::size_t s = 0; s < count; ++s) {
            const std::size_t begin = start + s * symbol + guard;
            const std::size_t end = start + (s + 1) * symbol - guard;
            tones.magnitudes(begin, end, mags);
            std::size_t best = 0;
            for (std::size_t t = 1; t < mags.size(); ++t) {
                if (mags[t] > mags[best]) best = t;
            }
            double second = 0.0;
            for (std::size_t t = 0; t < mags.size(); ++t) {
                if (t != best) second = std::max(second, mags[t]);
            }
            out.symbols.push_back(static_cast<Symbol>(best));
            if (second > 0.0) {
                out.confidences.push_back(mags[best] / second);
            } else {
                out.confidences.push_back(mags[best] > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
            }
        }
        return out;
    }
};

} // namespace

ProtocolProfile ProtocolProfile::audible() {
    ProtocolProfile p;
    p.name = "audible";
    p.band_low = 1700.0;
    p.band_high = 10500.0;
    return p;
}

ProtocolProfile ProtocolProfile::ultrasonic() {
    ProtocolProfile p;
    p.name = "ultrasonic";
    p.band_low = 18000.0;
    p.band_high = 20000.0;
    return p;
}

ProtocolProfile ProtocolProfile::by_name(std::string_view name) {
    if (name == "audible") return audible();
    if (name == "ultrasonic") return ultrasonic();
    throw InvalidArgument("unknown profile '" + std::string(name) + "' (expected audible or ultrasonic)");
}

double ProtocolProfile::tone_frequency(Symbol s) const {
    if (s >= tone_count) throw InvalidArgument("symbol outside the tone alphabet");
    return band_low + (band_high - band_low) * static_cast<double>(s) / (tone_count - 1);
}

std::vector<double> ProtocolProfile::tone_frequencies() const {
    std::vector<double> f(static_cast<std::size_t>(tone_count));
    for (int i = 0; i < tone_count; ++i) f[static_cast<std::size_t>(i)] = tone_frequency(static_cast<Symbol>(i));
    return f;
}

std::size_t ProtocolProfile::symbol_samples(int sample_rate) const {
    return static_cast<std::size_t>(std::lround(symbol_duration * sample_rate));
}

void ProtocolProfile::validate(int sample_rate) const {
    if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
    if (tone_count < 2 || tone_count > Gf32::kOrder) throw InvalidArgument("tone_count must be in [2, 32]");
    if (symbol_duration <= 2 * kRampSeconds) throw InvalidArgument("symbol duration too short for tone ramps");
    if (!(band_low > 0.0 && band_high > band_low)) throw InvalidArgument("invalid band");
    const double spacing = (band_high - band_low) / (tone_count - 1);
    if (spacing < 4.0 / symbol_duration - 1e-9) {
        throw InvalidArgument("tone spacing below four DFT bins at symbol resolution");
    }
    if (band_high >= 0.5 * sample_rate) {
        throw InvalidArgument("tone at " + std::to_string(band_high) + " Hz is above Nyquist for " +
                              std::to_string(sample_rate) + " Hz");
    }
    if (preamble[0] >= tone_count || preamble[1] >= tone_count || preamble[0] == preamble[1]) {
        throw InvalidArgument("invalid preamble symbols");
    }
    if (rs_parity < 2 || rs_parity > 30) throw InvalidArgument("rs_parity must be in [2, 30]");
    if (max_payload < 1 || max_payload >= static_cast<std::size_t>(tone_count)) {
        throw InvalidArgument("max_payload must fit in one length symbol");
    }
}

PacketLayout PacketLayout::for_payload(std::size_t payload_bytes, int parity) {
    PacketLayout layout;
    layout.payload_bytes = payload_bytes;
    layout.parity = parity;
    layout.data_symbols = (8 * payload_bytes + 4) / 5;
    const std::size_t per_block = ReedSolomon::kMaxLength - static_cast<std::size_t>(parity);
    const std::size_t blocks = std::max<std::size_t>(1, (layout.data_symbols + per_block - 1) / per_block);
    const std::size_t base = layout.data_symbols / blocks;
    const std::size_t extra = layout.data_symbols % blocks;
    for (std::size_t b = 0; b < blocks; ++b) layout.block_data.push_back(base + (b < extra ? 1 : 0));
    return layout;
}

std::vector<Symbol> pack_symbols(std::span<const std::uint8_t> bytes) {
    std::vector<Symbol> out;
    out.reserve((8 * bytes.size() + 4) / 5);
    unsigned acc = 0;
    int bits = 0;
    for (std::uint8_t b : bytes) {
        acc = (acc << 8) | b;
        bits += 8;
        while (bits >= 5) {
            bits -= 5;
            out.push_back(static_cast<Symbol>((acc >> bits) & 0x1F));
        }
        acc &= (1u << bits) - 1u;
    }
    if (bits > 0) out.push_back(static_cast<Symbol>((acc << (5 - bits)) & 0x1F));
    return out;
}

bool unpack_symbols(std::span<const Symbol> symbols, std::size_t byte_count, std::vector<std::uint8_t>& out) {
    out.clear();
    unsigned acc = 0;
    int bits = 0;
    for (Symbol s : symbols) {
        acc = (acc << 5) | (s & 0x1Fu);
        bits += 5;
        if (bits >= 8) {
            bits -= 8;
            if (out.size() < byte_count) {
                out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
            } else if (((acc >> bits) & 0xFF) != 0) {
                return false;
            }
        }
        acc &= (1u << bits) - 1u;
    }
    if (out.size() != byte_count) return false;
    return acc == 0;
}

std::vector<Symbol> packet_symbols(const Packet& pkt, const ProtocolProfile& profile) {
    if (pkt.payload.empty()) throw InvalidArgument("payload must not be empty");
    if (pkt.payload.size() > profile.max_payload) {
        throw InvalidArgument("payload of " + std::to_string(pkt.payload.size()) + " bytes exceeds the " +
                              std::to_string(profile.max_payload) + "-byte maximum");
    }
    const auto layout = PacketLayout::for_payload(pkt.payload.size(), profile.rs_parity);
    const auto data = pack_symbols(pkt.payload);
    const ReedSolomon rs(profile.rs_parity);

    std::vector<Symbol> out{profile.preamble[0], profile.preamble[1], static_cast<Symbol>(pkt.payload.size())};
    std::size_t pos = 0;
    for (std::size_t len : layout.block_data) {
        const auto cw = rs.encode(std::span(data).subspan(pos, len));
        out.insert(out.end(), cw.begin(), cw.end());
        pos += len;
    }
    return out;
}

std::vector<double> synthesize_symbols(std::span<const Symbol> symbols, const ProtocolProfile& profile,
                                       int sample_rate) {
    profile.validate(sample_rate);
    const std::size_t n = profile.symbol_samples(sample_rate);
    const std::size_t ramp = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(kRampSeconds * sample_rate)));
    std::vector<double> envelope(n, 1.0);
    for (std::size_t i = 0; i < ramp && i < n; ++i) {
        const double r = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(ramp));
        envelope[i] = r;
        envelope[n - 1 - i] = r;
    }
    std::vector<double> out(symbols.size() * n);
    for (std::size_t s = 0; s < symbols.size(); ++s) {
        const double w = 2.0 * std::numbers::pi * profile.tone_frequency(symbols[s]) / sample_rate;
        double* dst = out.data() + s * n;
        for (std::size_t i = 0; i < n; ++i) {
            dst[i] = kToneAmplitude * envelope[i] * std::sin(w * static_cast<double>(i));
        }
    }
    return out;
}

AudioBuffer encode_packet(const Packet& pkt, const ProtocolProfile& profile, int sample_rate) {
    profile.validate(sample_rate);
    const auto symbols = packet_symbols(pkt, profile);
    return AudioBuffer(synthesize_symbols(symbols, profile, sample_rate), sample_rate);
}

std::vector<std::size_t> detect_preamble(const AudioBuffer& buf, const ProtocolProfile& profile, double ratio) {
    profile.validate(buf.sample_rate());
    return Receiver(buf, profile).detect(ratio);
}

Demodulated demodulate_symbols(const AudioBuffer& buf, std::size_t start, std::size_t count,
                               const ProtocolProfile& profile) {
    profile.validate(buf.sample_rate());
    return Receiver(buf, profile).demodulate(start, count);
}

std::string_view to_string(DecodeStatus s) noexcept {
    switch (s) {
    case DecodeStatus::ok: return "ok";
    case DecodeStatus::no_preamble: return "no-preamble";
    case DecodeStatus::length_symbol_invalid: return "length-symbol-invalid";
    case DecodeStatus::fec_failure: return "fec-failure";
    }
    return "unknown";
}

DecodeResult decode_symbols(Symbol length_symbol, std::span<const Symbol> body,
                            std::span<const double> body_confidences, const ProtocolProfile& profile) {
    DecodeResult result;
    if (length_symbol < 1 || length_symbol > profile.max_payload) {
        result.status = DecodeStatus::length_symbol_invalid;
        return result;
    }
    const auto layout = PacketLayout::for_payload(length_symbol, profile.rs_parity);
    if (body.size() < layout.body_symbols() || body_confidences.size() < layout.body_symbols()) {
        result.status = DecodeStatus::length_symbol_invalid;
        return result;
    }

    const ReedSolomon rs(profile.rs_parity);
    std::vector<Symbol> data;
    data.reserve(layout.data_symbols);
    std::size_t pos = 0;
    result.status = DecodeStatus::fec_failure;
    for (std::size_t len : layout.block_data) {
        const std::size_t n = len + static_cast<std::size_t>(profile.rs_parity);
        std::vector<std::size_t> erasures;
        for (std::size_t i = 0; i < n; ++i) {
            if (body_confidences[pos + i] < kErasureThreshold) erasures.push_back(i);
        }
        const auto block = rs.decode(body.subspan(pos, n), erasures);
        if (!block.ok) return result;
        result.corrected_errors += block.corrected_errors;
        result.erasures_used += block.erasures_used;
        data.insert(data.end(), block.data.begin(), block.data.end());
        pos += n;
    }
    std::vector<std::uint8_t> payload;
    if (!unpack_symbols(data, layout.payload_bytes, payload)) return result;
    result.status = DecodeStatus::ok;
    result.payload = std::move(payload);
    return result;
}

DecodeResult decode_packet(const AudioBuffer& buf, const ProtocolProfile& profile) {
    profile.validate(buf.sample_rate());
    const Receiver rx(buf, profile);
    const auto candidates = rx.detect(6.0);

    DecodeResult last;
    last.status = DecodeStatus::no_preamble;
    const std::size_t guard = guard_samples(rx.symbol);
    for (std::size_t onset : candidates) {
        ++last.candidates_tried;
        const std::size_t length_start = onset + 2 * rx.symbol;
        if (length_start + rx.symbol - guard > buf.size()) {
            if (last.status == DecodeStatus::no_preamble) last.status = DecodeStatus::length_symbol_invalid;
            continue;
        }
        const auto length = rx.demodulate(length_start, 1);
        const Symbol len = length.symbols[0];
        std::size_t body_count = 0;
        if (len >= 1 && len <= profile.max_payload) {
            body_count = PacketLayout::for_payload(len, profile.rs_parity).body_symbols();
        }
        const std::size_t body_start = length_start + rx.symbol;
        if (body_count == 0 || body_start + body_count * rx.symbol - guard > buf.size()) {
            if (last.status != DecodeStatus::fec_failure) last.status = DecodeStatus::length_symbol_invalid;
            continue;
        }
        const auto body = rx.demodulate(body_start, body_count);
        auto attempt = decode_symbols(len, body.symbols, body.confidences, profile);
        attempt.preamble_offset = onset;
        attempt.candidates_tried = last.candidates_tried;
        attempt.symbol_confidences.reserve(body_count + 1);
        attempt.symbol_confidences.push_back(length.confidences[0]);
        attempt.symbol_confidences.insert(attempt.symbol_confidences.end(), body.confidences.begin(),
                                          body.confidences.end());
        if (attempt.ok()) return attempt;
        last = std::move(attempt);
    }
    return last;
}

} // namespace echoless
