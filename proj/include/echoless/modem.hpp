#pragma once

#include "echoless/audio.hpp"
#include "echoless/reed_solomon.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace echoless {

/// Modem configuration. Tones are `tone_count` frequencies evenly spaced over
/// [band_low, band_high]; symbol k maps to the k-th tone from the bottom.
struct ProtocolProfile {
    std::string name;
    double band_low = 0.0;
    double band_high = 0.0;
    int tone_count = 32;
    double symbol_duration = 0.080;
    std::array<Symbol, 2> preamble{5, 26};
    int rs_parity = 8;
    std::size_t max_payload = 16;  ///< bytes

    static ProtocolProfile audible();
    static ProtocolProfile ultrasonic();
    /// "audible" or "ultrasonic"; throws InvalidArgument otherwise.
    static ProtocolProfile by_name(std::string_view name);

    [[nodiscard]] double tone_frequency(Symbol s) const;
    [[nodiscard]] std::vector<double> tone_frequencies() const;
    [[nodiscard]] std::size_t symbol_samples(int sample_rate) const;

    /// Tone spacing >= 4 / symbol_duration and every tone below Nyquist.
    void validate(int sample_rate) const;
};

struct Packet {
    std::vector<std::uint8_t> payload;
};

/// Where each part of a packet sits, in symbol slots from the preamble start.
struct PacketLayout {
    std::size_t payload_bytes = 0;
    std::size_t data_symbols = 0;
    std::vector<std::size_t> block_data;  ///< data symbols per RS block
    int parity = 0;

    static PacketLayout for_payload(std::size_t payload_bytes, int parity);

    [[nodiscard]] std::size_t body_symbols() const noexcept {
        return data_symbols + block_data.size() * static_cast<std::size_t>(parity);
    }
    /// Preamble pair + length symbol + body.
    [[nodiscard]] std::size_t total_symbols() const noexcept { return 3 + body_symbols(); }
};

/// Payload bytes to 5-bit symbols, MSB first, zero padded at the end.
std::vector<Symbol> pack_symbols(std::span<const std::uint8_t> bytes);
/// Inverse of pack_symbols. Returns false if any padding bit is set.
bool unpack_symbols(std::span<const Symbol> symbols, std::size_t byte_count, std::vector<std::uint8_t>& out);

/// Symbol sequence as transmitted: preamble, length, RS-coded body.
std::vector<Symbol> packet_symbols(const Packet& pkt, const ProtocolProfile& profile);

/// Throws InvalidArgument for an empty or oversized payload or a profile the
/// sample rate cannot carry.
AudioBuffer encode_packet(const Packet& pkt, const ProtocolProfile& profile, int sample_rate);

/// Synthesizes an arbitrary symbol sequence with the modem's tone shaping.
std::vector<double> synthesize_symbols(std::span<const Symbol> symbols, const ProtocolProfile& profile,
                                       int sample_rate);

/// Preamble search: Goertzel magnitudes over a sliding one-symbol window
/// (hop symbol/8). An offset qualifies when preamble tone 0 over
/// [o, o + S) and preamble tone 1 over [o + S, o + 2S) each exceed
/// `ratio` times the median magnitude of the other tones in their window and
/// is the strongest tone there apart from the other preamble tone.
/// Returns refined onsets, sorted, at least one symbol apart.
std::vector<std::size_t> detect_preamble(const AudioBuffer& buf, const ProtocolProfile& profile,
                                         double ratio = 6.0);

struct Demodulated {
    std::vector<Symbol> symbols;
    std::vector<double> confidences;  ///< best / second-best tone magnitude
};

/// Demodulates `count` symbols starting at `start`, using the central 80% of
/// each symbol slot. Throws InvalidArgument if the last window runs off the buffer.
Demodulated demodulate_symbols(const AudioBuffer& buf, std::size_t start, std::size_t count,
                               const ProtocolProfile& profile);

enum class DecodeStatus { ok, no_preamble, length_symbol_invalid, fec_failure };

std::string_view to_string(DecodeStatus s) noexcept;

struct DecodeResult {
    DecodeStatus status = DecodeStatus::no_preamble;
    std::vector<std::uint8_t> payload;
    std::size_t preamble_offset = 0;
    std::vector<double> symbol_confidences;  ///< length symbol then body
    int corrected_errors = 0;
    int erasures_used = 0;
    std::size_t candidates_tried = 0;

    [[nodiscard]] bool ok() const noexcept { return status == DecodeStatus::ok; }
};

/// Confidence below which a body symbol is handed to the RS decoder as an erasure.
inline constexpr double kErasureThreshold = 1.5;

/// Decodes from already-demodulated symbols: length symbol, then body.
DecodeResult decode_symbols(Symbol length_symbol, std::span<const Symbol> body,
                            std::span<const double> body_confidences, const ProtocolProfile& profile);

/// Full receive chain: preamble candidates in order, each demodulated and FEC
/// decoded until one succeeds.
DecodeResult decode_packet(const AudioBuffer& buf, const ProtocolProfile& profile);

} // namespace echoless
