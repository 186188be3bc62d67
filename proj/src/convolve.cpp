#include "echoless/convolve.hpp"

#include "echoless/errors.hpp"
#include "echoless/fft.hpp"

#include <algorithm>
#include <complex>

namespace echoless {

namespace {

std::vector<double> direct_convolve(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += ai * b[j];
    }
    return out;
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
    const std::size_t out_len = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(out_len);
    RealFft fft(n);
    std::vector<double> pa(n, 0.0);
    std::vector<double> pb(n, 0.0);
    std::copy(a.begin(), a.end(), pa.begin());
    std::copy(b.begin(), b.end(), pb.begin());
    std::vector<std::complex<double>> fa(fft.bins());
    std::vector<std::complex<double>> fb(fft.bins());
    fft.forward(pa, fa);
    fft.forward(pb, fb);
    for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
    fft.inverse(fa, pa);
    const double scale = 1.0 / static_cast<double>(n);
    std::vector<double> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = pa[i] * scale;
    return out;
}

} // namespace

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InvalidArgument("convolve: empty input");
    if (std::min(a.size(), b.size()) <= 32) return direct_convolve(a, b);
    return fft_convolve(a, b);
}

AudioBuffer convolve(const AudioBuffer& signal, const AudioBuffer& ir) {
    if (signal.sample_rate() != ir.sample_rate()) {
        throw InvalidArgument("convolve: sample rate mismatch (" + std::to_string(signal.sample_rate()) +
                              " vs " + std::to_string(ir.sample_rate()) + ")");
    }
    return AudioBuffer(convolve(signal.samples(), ir.samples()), signal.sample_rate());
}

} // namespace echoless
