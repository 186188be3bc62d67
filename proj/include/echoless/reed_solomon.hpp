#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace echoless {

using Symbol = std::uint8_t;

/// GF(2^5) with primitive polynomial x^5 + x^2 + 1; alpha = 2.
class Gf32 {
public:
    static constexpr int kOrder = 32;
    static constexpr int kPrimitive = 0x25;

    static Symbol add(Symbol a, Symbol b) noexcept { return a ^ b; }
    static Symbol mul(Symbol a, Symbol b) noexcept;
    static Symbol div(Symbol a, Symbol b);
    static Symbol inv(Symbol a);
    /// alpha^e for any integer e.
    static Symbol exp(int e) noexcept;
    /// Discrete log; a must be nonzero.
    static int log(Symbol a);
};

struct RsDecodeResult {
    bool ok = false;
    std::vector<Symbol> data;
    int corrected_errors = 0;
    int erasures_used = 0;
};

/// Systematic Reed-Solomon code over GF(32): codeword = data followed by
/// `parity` check symbols, generator roots alpha^1 .. alpha^parity.
/// Codewords of fewer than 31 symbols are shortened codes.
class ReedSolomon {
public:
    static constexpr std::size_t kMaxLength = 31;

    explicit ReedSolomon(int parity = 8);

    [[nodiscard]] int parity() const noexcept { return parity_; }
    /// Coefficients of g(x), highest degree first, monic.
    [[nodiscard]] const std::vector<Symbol>& generator() const noexcept { return generator_; }

    /// Throws InvalidArgument if data.size() + parity > 31 or a symbol is >= 32.
    [[nodiscard]] std::vector<Symbol> encode(std::span<const Symbol> data) const;

    /// Errors-and-erasures decode. Succeeds whenever
    /// 2 * errors + erasures <= parity; otherwise reports failure, or in rare
    /// cases lands on a different valid codeword.
    [[nodiscard]] RsDecodeResult decode(std::span<const Symbol> codeword,
                                        std::span<const std::size_t> erasures = {}) const;

    /// All syndromes zero.
    [[nodiscard]] bool is_codeword(std::span<const Symbol> codeword) const;

private:
    [[nodiscard]] std::vector<Symbol> syndromes(std::span<const Symbol> codeword) const;

    int parity_;
    std::vector<Symbol> generator_;
};

} // namespace echoless
