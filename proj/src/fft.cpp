#include "echoless/fft.hpp"

#include "echoless/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <utility>

namespace echoless {

namespace {

// FFTW planning and plan destruction are not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
    if (size_ < 2) throw InvalidArgument("FFT size must be at least 2");
    real_ = fftw_alloc_real(size_);
    auto* spec = fftw_alloc_complex(bins());
    spectrum_ = spec;
    std::lock_guard lock(planner_mutex());
    forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(size_), real_, spec, FFTW_ESTIMATE);
    inverse_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(size_), spec, real_,
                                         FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
}

RealFft::~RealFft() { release(); }

RealFft::RealFft(RealFft&& other) noexcept
    : size_(std::exchange(other.size_, 0)),
      real_(std::exchange(other.real_, nullptr)),
      spectrum_(std::exchange(other.spectrum_, nullptr)),
      forward_plan_(std::exchange(other.forward_plan_, nullptr)),
      inverse_plan_(std::exchange(other.inverse_plan_, nullptr)) {}

RealFft& RealFft::operator=(RealFft&& other) noexcept {
    if (this != &other) {
        release();
        size_ = std::exchange(other.size_, 0);
        real_ = std::exchange(other.real_, nullptr);
        spectrum_ = std::exchange(other.spectrum_, nullptr);
        forward_plan_ = std::exchange(other.forward_plan_, nullptr);
        inverse_plan_ = std::exchange(other.inverse_plan_, nullptr);
    }
    return *this;
}

void RealFft::release() noexcept {
    {
        std::lock_guard lock(planner_mutex());
        if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
        if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
    }
    if (real_) fftw_free(real_);
    if (spectrum_) fftw_free(spectrum_);
    forward_plan_ = inverse_plan_ = nullptr;
    real_ = nullptr;
    spectrum_ = nullptr;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
    if (in.size() != size_ || out.size() != bins()) throw InvalidArgument("RealFft::forward size mismatch");
    std::copy(in.begin(), in.end(), real_);
    fftw_execute(static_cast<fftw_plan>(forward_plan_));
    std::memcpy(out.data(), spectrum_, bins() * sizeof(fftw_complex));
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    if (in.size() != bins() || out.size() != size_) throw InvalidArgument("RealFft::inverse size mismatch");
    std::memcpy(spectrum_, in.data(), bins() * sizeof(fftw_complex));
    fftw_execute(static_cast<fftw_plan>(inverse_plan_));
    std::copy(real_, real_ + size_, out.begin());
}

std::size_t next_pow2(std::size_t n) noexcept {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

} // namespace echoless
