#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace echoless {

/// Mono sample sequence with its sample rate.
///
/// Samples are nominally in [-1, 1]. Construction rejects a non-positive
/// rate and any non-finite sample, so every AudioBuffer in flight is valid.
class AudioBuffer {
public:
    AudioBuffer(std::vector<double> samples, int sample_rate);

    static AudioBuffer silence(std::size_t length, int sample_rate);

    [[nodiscard]] std::span<const double> samples() const noexcept { return samples_; }
    [[nodiscard]] const std::vector<double>& vector() const noexcept { return samples_; }
    [[nodiscard]] int sample_rate() const noexcept { return sample_rate_; }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }
    [[nodiscard]] double duration() const noexcept {
        return static_cast<double>(samples_.size()) / sample_rate_;
    }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return samples_[i]; }

    /// Moves the samples out; the buffer is left empty.
    [[nodiscard]] std::vector<double> release() && noexcept { return std::move(samples_); }

    friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;

private:
    std::vector<double> samples_;
    int sample_rate_;
};

AudioBuffer scaled(const AudioBuffer& buf, double gain);

[[nodiscard]] double energy(std::span<const double> x) noexcept;
[[nodiscard]] double peak_abs(std::span<const double> x) noexcept;

} // namespace echoless
