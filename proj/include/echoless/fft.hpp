#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace echoless {

/// Real-input FFT of a fixed size.
///
/// Each instance owns its plan and scratch buffers; instances are not
/// shareable between threads, but any number may exist concurrently.
class RealFft {
public:
    explicit RealFft(std::size_t size);
    ~RealFft();

    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;
    RealFft(RealFft&& other) noexcept;
    RealFft& operator=(RealFft&& other) noexcept;

    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] std::size_t bins() const noexcept { return size_ / 2 + 1; }

    /// in.size() == size(), out.size() == bins().
    void forward(std::span<const double> in, std::span<std::complex<double>> out);

    /// Unnormalized inverse: forward followed by inverse scales by size().
    void inverse(std::span<const std::complex<double>> in, std::span<double> out);

private:
    void release() noexcept;

    std::size_t size_ = 0;
    double* real_ = nullptr;
    void* spectrum_ = nullptr;
    void* forward_plan_ = nullptr;
    void* inverse_plan_ = nullptr;
};

/// Smallest power of two >= n.
[[nodiscard]] std::size_t next_pow2(std::size_t n) noexcept;

} // namespace echoless
