#include "echoless/audio.hpp"

#include "echoless/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace echoless {

AudioBuffer::AudioBuffer(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
    if (sample_rate_ <= 0) {
        throw InvalidArgument("sample rate must be positive, got " + std::to_string(sample_rate_));
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i])) {
            throw InvalidArgument("non-finite sample at index " + std::to_string(i));
        }
    }
}

AudioBuffer AudioBuffer::silence(std::size_t length, int sample_rate) {
    return AudioBuffer(std::vector<double>(length, 0.0), sample_rate);
}

AudioBuffer scaled(const AudioBuffer& buf, double gain) {
    std::vector<double> out(buf.samples().begin(), buf.samples().end());
    for (double& v : out) v *= gain;
    return AudioBuffer(std::move(out), buf.sample_rate());
}

double energy(std::span<const double> x) noexcept {
    double e = 0.0;
    for (double v : x) e += v * v;
    return e;
}

double peak_abs(std::span<const double> x) noexcept {
    double p = 0.0;
    for (double v : x) p = std::max(p, std::abs(v));
    return p;
}

} // namespace echoless
