#pragma once

#include "echoless/audio.hpp"

#include <complex>
#include <cstddef>
#include <vector>

namespace echoless {

/// Periodic Hann taper of the given length: w[n] = 0.5 - 0.5 cos(2 pi n / length).
/// Throws InvalidArgument for length < 2.
std::vector<double> make_window(std::size_t length);

struct StftConfig {
    std::size_t window_length = 2048;
    std::size_t hop = 128;

    /// 46 ms Hann window rounded to the nearest power of two, 93.75% overlap.
    static StftConfig for_rate(int sample_rate);

    /// Throws InvalidArgument unless hop divides window_length with at least
    /// three frames overlapping each sample (the Hann^2 overlap-add condition).
    void validate() const;

    [[nodiscard]] std::size_t bins() const noexcept { return window_length / 2 + 1; }

    friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

/// Dense real grid indexed (bin k, frame l), frame-major.
struct RealGrid {
    std::size_t bins = 0;
    std::size_t frames = 0;
    std::vector<double> data;

    RealGrid() = default;
    RealGrid(std::size_t bins_, std::size_t frames_, double fill = 0.0)
        : bins(bins_), frames(frames_), data(bins_ * frames_, fill) {}

    [[nodiscard]] double& at(std::size_t k, std::size_t l) { return data[l * bins + k]; }
    [[nodiscard]] double at(std::size_t k, std::size_t l) const { return data[l * bins + k]; }
    [[nodiscard]] bool same_shape(const RealGrid& o) const noexcept {
        return bins == o.bins && frames == o.frames;
    }
};

/// One-sided complex STFT. Frame l covers samples [l*hop, l*hop + window_length).
class Spectrogram {
public:
    Spectrogram(StftConfig cfg, int sample_rate, std::size_t frames, std::size_t signal_length);

    [[nodiscard]] std::size_t bins() const noexcept { return cfg_.bins(); }
    [[nodiscard]] std::size_t frames() const noexcept { return frames_; }
    [[nodiscard]] const StftConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] int sample_rate() const noexcept { return sample_rate_; }
    [[nodiscard]] std::size_t signal_length() const noexcept { return signal_length_; }

    [[nodiscard]] std::complex<double>& at(std::size_t k, std::size_t l) { return data_[l * bins() + k]; }
    [[nodiscard]] const std::complex<double>& at(std::size_t k, std::size_t l) const {
        return data_[l * bins() + k];
    }
    [[nodiscard]] std::vector<std::complex<double>>& data() noexcept { return data_; }
    [[nodiscard]] const std::vector<std::complex<double>>& data() const noexcept { return data_; }

    [[nodiscard]] double frame_time(std::size_t l) const noexcept {
        return static_cast<double>(l * cfg_.hop) / sample_rate_;
    }
    [[nodiscard]] double frame_period() const noexcept {
        return static_cast<double>(cfg_.hop) / sample_rate_;
    }
    [[nodiscard]] double bin_frequency(std::size_t k) const noexcept {
        return static_cast<double>(k) * sample_rate_ / static_cast<double>(cfg_.window_length);
    }

    /// |X(k,l)|^2 for every bin.
    [[nodiscard]] RealGrid power() const;

private:
    StftConfig cfg_;
    int sample_rate_;
    std::size_t frames_;
    std::size_t signal_length_;
    std::vector<std::complex<double>> data_;
};

/// Throws InvalidArgument if the buffer is shorter than one window.
Spectrogram stft(const AudioBuffer& buf, const StftConfig& cfg);

/// Weighted overlap-add resynthesis (Hann analysis and synthesis windows).
/// Output has the original signal length.
AudioBuffer istft(const Spectrogram& spec);

/// Sum over all frames of the two-sided spectral energy (one-sided bins
/// weighted to account for their mirror images).
[[nodiscard]] double spectral_energy(const Spectrogram& spec);

} // namespace echoless
