#pragma once

#include "echoless/audio.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace echoless {

/// Synthetic room: unit direct path at t = 0 followed by Polack-model late
/// reverberation (seeded white Gaussian noise under exp(-delta t)).
struct RirSpec {
    double rt60 = 1.0;
    std::optional<double> length;  ///< seconds; default 1.5 * rt60
    double direct_gain = 1.0;
    /// Direct-to-reverberant energy ratio at rt60 = 1 s. Tail energy scales
    /// linearly with rt60 from there.
    double drr_db_at_1s = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    [[nodiscard]] double length_seconds() const { return length.value_or(1.5 * rt60); }
};

AudioBuffer synth_rir(const RirSpec& spec, int sample_rate);

struct ChannelSpec {
    std::variant<AudioBuffer, RirSpec> rir = RirSpec{};
    std::optional<double> snr_db;          ///< additive white noise relative to the convolved signal
    std::optional<double> normalize_peak;  ///< rescale so the peak magnitude equals this
    std::uint64_t noise_seed = 0;
};

/// Convolve, optionally add white noise at snr_db, optionally peak-normalize.
/// A synthetic RIR is generated at the signal's sample rate.
AudioBuffer apply_channel(const AudioBuffer& signal, const ChannelSpec& chan);

struct RirEntry {
    std::string name;
    AudioBuffer rir;
    std::optional<double> rt60;
};

struct RirCorpus {
    std::vector<RirEntry> entries;
    std::vector<std::string> rejected;  ///< files that could not be used, each with a warning
    std::vector<std::string> warnings;
};

/// All *.wav files in `directory`, sorted by name, with RT60 labels from an
/// optional labels.csv (header `file,rt60`). Unreadable files and, when
/// `expected_rate` is set, rate mismatches become warnings. Throws
/// FormatError if the directory itself cannot be read.
RirCorpus load_rir_corpus(const std::filesystem::path& directory,
                          std::optional<int> expected_rate = std::nullopt);

} // namespace echoless
