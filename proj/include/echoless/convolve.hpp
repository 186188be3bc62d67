#pragma once

#include "echoless/audio.hpp"

#include <span>
#include <vector>

namespace echoless {

/// Full linear convolution, length len(signal) + len(ir) - 1.
/// Throws InvalidArgument on rate mismatch or empty input.
AudioBuffer convolve(const AudioBuffer& signal, const AudioBuffer& ir);

/// Raw sequence convolution. Uses FFT overlap for long inputs, direct form otherwise.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

} // namespace echoless
