#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace echoless {

/// Single-bin DFT correlations of a signal against a fixed set of tones.
///
/// Running sums of x[m] e^{-i w m} are checkpointed every `stride` samples,
/// so the correlation over any window costs O(stride) rather than O(window).
/// The magnitude over [b, e) equals the Goertzel output for that window.
class ToneCorrelator {
public:
    /// `frequencies` in Hz.
    ToneCorrelator(std::span<const double> signal, int sample_rate, std::span<const double> frequencies,
                   std::size_t stride);

    [[nodiscard]] std::size_t tone_count() const noexcept { return omegas_.size(); }
    [[nodiscard]] std::size_t signal_length() const noexcept { return signal_.size(); }

    [[nodiscard]] std::complex<double> window_sum(std::size_t tone, std::size_t begin, std::size_t end) const;
    [[nodiscard]] double magnitude(std::size_t tone, std::size_t begin, std::size_t end) const {
        return std::abs(window_sum(tone, begin, end));
    }
    /// Magnitudes of every tone over [begin, end).
    void magnitudes(std::size_t begin, std::size_t end, std::span<double> out) const;

private:
    [[nodiscard]] std::complex<double> prefix(std::size_t tone, std::size_t pos) const;

    std::span<const double> signal_;
    std::vector<double> omegas_;
    std::size_t stride_;
    std::size_t checkpoints_;
    // checkpoint c of tone t at [t * checkpoints_ + c] holds sum over [0, c*stride).
    std::vector<std::complex<double>> sums_;
};

/// Classic Goertzel magnitude of x at frequency `freq` (Hz). Reference path for tests
/// and for one-off measurements.
[[nodiscard]] double goertzel_magnitude(std::span<const double> x, int sample_rate, double freq);

} // namespace echoless
