#include "echoless/tone_bank.hpp"

#include "echoless/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace echoless {

ToneCorrelator::ToneCorrelator(std::span<const double> signal, int sample_rate,
                               std::span<const double> frequencies, std::size_t stride)
    : signal_(signal), stride_(std::max<std::size_t>(stride, 1)) {
    if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
    omegas_.reserve(frequencies.size());
    for (double f : frequencies) omegas_.push_back(2.0 * std::numbers::pi * f / sample_rate);
    checkpoints_ = signal_.size() / stride_ + 1;
    sums_.assign(omegas_.size() * checkpoints_, {});

    for (std::size_t t = 0; t < omegas_.size(); ++t) {
        const std::complex<double> step = std::polar(1.0, -omegas_[t]);
        std::complex<double> acc{};
        auto* out = sums_.data() + t * checkpoints_;
        out[0] = acc;
        for (std::size_t c = 1; c < checkpoints_; ++c) {
            const std::size_t begin = (c - 1) * stride_;
            // Reanchor the phasor exactly at every checkpoint; drift stays O(stride * eps).
            std::complex<double> phasor = std::polar(1.0, -omegas_[t] * static_cast<double>(begin));
            for (std::size_t m = begin; m < begin + stride_; ++m) {
                acc += signal_[m] * phasor;
                phasor *= step;
            }
            out[c] = acc;
        }
    }
}

std::complex<double> ToneCorrelator::prefix(std::size_t tone, std::size_t pos) const {
    const std::size_t c = pos / stride_;
    std::complex<double> acc = sums_[tone * checkpoints_ + c];
    const std::size_t begin = c * stride_;
    if (pos > begin) {
        const double w = omegas_[tone];
        const std::complex<double> step = std::polar(1.0, -w);
        std::complex<double> phasor = std::polar(1.0, -w * static_cast<double>(begin));
        for (std::size_t m = begin; m < pos; ++m) {
            acc += signal_[m] * phasor;
            phasor *= step;
        }
    }
    return acc;
}

std::complex<double> ToneCorrelator::window_sum(std::size_t tone, std::size_t begin, std::size_t end) const {
    if (tone >= omegas_.size()) throw InvalidArgument("tone index out of range");
    if (begin > end || end > signal_.size()) throw InvalidArgument("correlation window out of range");
    return prefix(tone, end) - prefix(tone, begin);
}

void ToneCorrelator::magnitudes(std::size_t begin, std::size_t end, std::span<double> out) const {
    for (std::size_t t = 0; t < omegas_.size() && t < out.size(); ++t) out[t] = magnitude(t, begin, end);
}

double goertzel_magnitude(std::span<const double> x, int sample_rate, double freq) {
    const double w = 2.0 * std::numbers::pi * freq / sample_rate;
    const double coeff = 2.0 * std::cos(w);
    double s1 = 0.0;
    double s2 = 0.0;
    for (double v : x) {
        const double s0 = v + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    const double power = s1 * s1 + s2 * s2 - coeff * s1 * s2;
    return std::sqrt(std::max(power, 0.0));
}

} // namespace echoless
