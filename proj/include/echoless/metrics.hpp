#pragma once

#include "echoless/modem.hpp"
#include "echoless/stft.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace echoless {

/// Dynamic range of the clipped log spectra used by LSD.
inline constexpr double kLsdDynamicRangeDb = 50.0;
/// Frames (LSD) and time-frequency cells (RR) more than this far below the
/// reference maximum count as containing no packet tone.
inline constexpr double kActivityThresholdDb = 40.0;

struct LsdResult {
    double mean_db = 0.0;
    std::vector<double> per_frame_db;  ///< NaN for frames excluded from the mean
    std::size_t frames_used = 0;
    bool truncated = false;            ///< inputs differed in frame count
};

/// Log spectral distance between a clean reference and a test spectrogram.
/// Each side is clipped to 50 dB below its own maximum; the mean runs over
/// frames whose clean power is within 40 dB of the loudest clean frame.
/// Throws InvalidArgument on mismatched bin counts and MetricUnavailable if
/// the clean spectrogram is silent.
LsdResult lsd(const Spectrogram& clean, const Spectrogram& test);

struct BandRr {
    std::size_t band = 0;
    double frequency_hz = 0.0;
    double rr_db = 0.0;
};

struct RrResult {
    double mean_db = 0.0;
    std::vector<BandRr> per_band;
    bool truncated = false;
};

/// Reverberation reduction: per band, power of the reverberant input over
/// power of the processed output, summed over the band's tone-free frames.
/// Tone-free cells are those of `reference` (the clean signal when known,
/// otherwise the reverberant input) below its maximum minus 40 dB; only bands
/// whose reverberant peak lies within 40 dB of the global peak are scored.
/// Throws MetricUnavailable when no band qualifies.
RrResult rr(const Spectrogram& reverberant, const Spectrogram& processed,
            const Spectrogram* reference = nullptr);

/// 100 * successes / total. Throws InvalidArgument when empty.
double decode_rate(std::span<const bool> successes);
/// Success means status ok and payload identical to the truth.
double decode_rate(std::span<const DecodeResult> results, std::span<const std::vector<std::uint8_t>> truths);

struct MetricReport {
    double mean_lsd = 0.0;
    double mean_rr = 0.0;
    std::vector<BandRr> per_band_rr;
    std::size_t frames_used = 0;
    std::size_t bands_used = 0;
};

/// LSD of processed against clean plus RR of processed against reverberant.
MetricReport evaluate(const Spectrogram& clean, const Spectrogram& reverberant, const Spectrogram& processed);

std::string to_json(const MetricReport& report);
std::string rr_csv(const RrResult& result);

} // namespace echoless
