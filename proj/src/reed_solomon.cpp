#include "echoless/reed_solomon.hpp"

#include "echoless/errors.hpp"

#include <algorithm>
#include <string>

namespace echoless {

namespace {

struct Tables {
    std::array<Symbol, 62> exp{};
    std::array<int, 32> log{};

    Tables() {
        int x = 1;
        for (int i = 0; i < 31; ++i) {
            exp[i] = static_cast<Symbol>(x);
            exp[i + 31] = static_cast<Symbol>(x);
            log[x] = i;
            x <<= 1;
            if (x & 0x20) x ^= Gf32::kPrimitive;
        }
        log[0] = -1;
    }
};

const Tables& tables() {
    static const Tables t;
    return t;
}

// Polynomials below are stored lowest degree first.
Symbol eval_low_first(const std::vector<Symbol>& p, Symbol x) {
    Symbol acc = 0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = Gf32::add(Gf32::mul(acc, x), *it);
    return acc;
}

void trim(std::vector<Symbol>& p) {
    while (p.size() > 1 && p.back() == 0) p.pop_back();
}

} // namespace

Symbol Gf32::mul(Symbol a, Symbol b) noexcept {
    if (a == 0 || b == 0) return 0;
    const auto& t = tables();
    return t.exp[t.log[a] + t.log[b]];
}

Symbol Gf32::div(Symbol a, Symbol b) {
    if (b == 0) throw InvalidArgument("GF(32) division by zero");
    if (a == 0) return 0;
    const auto& t = tables();
    return t.exp[t.log[a] - t.log[b] + 31];
}

Symbol Gf32::inv(Symbol a) { return div(1, a); }

Symbol Gf32::exp(int e) noexcept {
    int r = e % 31;
    if (r < 0) r += 31;
    return tables().exp[r];
}

int Gf32::log(Symbol a) {
    if (a == 0 || a >= 32) throw InvalidArgument("GF(32) log of zero or out-of-field value");
    return tables().log[a];
}

ReedSolomon::ReedSolomon(int parity) : parity_(parity) {
    if (parity < 1 || parity > 30) throw InvalidArgument("RS parity must be in [1, 30]");
    // g(x) = prod_{j=1..parity} (x - alpha^j), built highest degree first.
    generator_ = {1};
    for (int j = 1; j <= parity; ++j) {
        const Symbol root = Gf32::exp(j);
        std::vector<Symbol> next(generator_.size() + 1, 0);
        for (std::size_t i = 0; i < generator_.size(); ++i) {
            next[i] ^= generator_[i];
            next[i + 1] ^= Gf32::mul(generator_[i], root);
        }
        generator_ = std::move(next);
    }
}

std::vector<Symbol> ReedSolomon::encode(std::span<const Symbol> data) const {
    if (data.size() + static_cast<std::size_t>(parity_) > kMaxLength) {
        throw InvalidArgument("RS codeword length " + std::to_string(data.size() + parity_) + " exceeds 31");
    }
    std::vector<Symbol> remainder(static_cast<std::size_t>(parity_), 0);
    for (Symbol d : data) {
        if (d >= 32) throw InvalidArgument("symbol out of GF(32) range");
        const Symbol feedback = Gf32::add(d, remainder.front());
        remainder.erase(remainder.begin());
        remainder.push_back(0);
        if (feedback != 0) {
            for (int i = 0; i < parity_; ++i) {
                remainder[static_cast<std::size_t>(i)] ^= Gf32::mul(feedback, generator_[static_cast<std::size_t>(i) + 1]);
            }
        }
    }
    std::vector<Symbol> codeword(data.begin(), data.end());
    codeword.insert(codeword.end(), remainder.begin(), remainder.end());
    return codeword;
}

std::vector<Symbol> ReedSolomon::syndromes(std::span<const Symbol> codeword) const {
    std::vector<Symbol> s(static_cast<std::size_t>(parity_));
    for (int j = 0; j < parity_; ++j) {
        const Symbol x = Gf32::exp(j + 1);
        Symbol acc = 0;
        for (Symbol c : codeword) acc = Gf32::add(Gf32::mul(acc, x), c);
        s[static_cast<std::size_t>(j)] = acc;
    }
    return s;
}

bool ReedSolomon::is_codeword(std::span<const Symbol> codeword) const {
    const auto s = syndromes(codeword);
    return std::all_of(s.begin(), s.end(), [](Symbol v) { return v == 0; });
}

RsDecodeResult ReedSolomon::decode(std::span<const Symbol> codeword, std::span<const std::size_t> erasures) const {
    const std::size_t n = codeword.size();
    if (n > kMaxLength) throw InvalidArgument("RS codeword longer than 31 symbols");
    if (n <= static_cast<std::size_t>(parity_)) throw InvalidArgument("RS codeword shorter than parity");
    for (Symbol c : codeword) {
        if (c >= 32) throw InvalidArgument("symbol out of GF(32) range");
    }
    std::vector<std::size_t> erased(erasures.begin(), erasures.end());
    std::sort(erased.begin(), erased.end());
    erased.erase(std::unique(erased.begin(), erased.end()), erased.end());
    for (std::size_t e : erased) {
        if (e >= n) throw InvalidArgument("erasure position out of range");
    }

    const std::size_t k = n - static_cast<std::size_t>(parity_);
    RsDecodeResult result;
    result.erasures_used = static_cast<int>(erased.size());
    if (erased.size() > static_cast<std::size_t>(parity_)) return result;

    std::vector<Symbol> word(codeword.begin(), codeword.end());
    const auto synd = syndromes(word);
    if (std::all_of(synd.begin(), synd.end(), [](Symbol v) { return v == 0; })) {
        result.ok = true;
        result.data.assign(word.begin(), word.begin() + static_cast<std::ptrdiff_t>(k));
        return result;
    }

    // Position i carries the locator alpha^(n-1-i).
    auto locator_of = [n](std::size_t i) { return Gf32::exp(static_cast<int>(n - 1 - i)); };

    // Erasure locator prod (1 - X_j x).
    std::vector<Symbol> lambda{1};
    for (std::size_t e : erased) {
        const Symbol x = locator_of(e);
        std::vector<Symbol> next(lambda.size() + 1, 0);
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            next[i] ^= lambda[i];
            next[i + 1] ^= Gf32::mul(lambda[i], x);
        }
        lambda = std::move(next);
    }

    // Berlekamp-Massey seeded with the erasure locator.
    const int rho = static_cast<int>(erased.size());
    std::vector<Symbol> prev = lambda;
    int order = rho;
    for (int r = rho + 1; r <= parity_; ++r) {
        Symbol delta = 0;
        for (std::size_t j = 0; j < lambda.size(); ++j) {
            const int idx = r - 1 - static_cast<int>(j);
            if (idx < 0) break;
            delta ^= Gf32::mul(lambda[j], synd[static_cast<std::size_t>(idx)]);
        }
        std::vector<Symbol> shifted(prev.size() + 1, 0);
        std::copy(prev.begin(), prev.end(), shifted.begin() + 1);
        if (delta == 0) {
            prev = std::move(shifted);
            continue;
        }
        std::vector<Symbol> candidate(std::max(lambda.size(), shifted.size()), 0);
        for (std::size_t i = 0; i < lambda.size(); ++i) candidate[i] ^= lambda[i];
        for (std::size_t i = 0; i < shifted.size(); ++i) candidate[i] ^= Gf32::mul(delta, shifted[i]);
        if (2 * order <= r + rho - 1) {
            order = r + rho - order;
            const Symbol inv_delta = Gf32::inv(delta);
            prev.assign(lambda.size(), 0);
            for (std::size_t i = 0; i < lambda.size(); ++i) prev[i] = Gf32::mul(lambda[i], inv_delta);
        } else {
            prev = std::move(shifted);
        }
        lambda = std::move(candidate);
    }
    trim(lambda);
    const int degree = static_cast<int>(lambda.size()) - 1;
    if (degree != order) return result;
    const int errors = degree - rho;
    if (errors < 0 || 2 * errors + rho > parity_) return result;

    // Chien search over the valid positions only.
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < n; ++i) {
        if (eval_low_first(lambda, Gf32::inv(locator_of(i))) == 0) positions.push_back(i);
    }
    if (static_cast<int>(positions.size()) != degree) return result;

    // Omega(x) = S(x) Lambda(x) mod x^parity.
    std::vector<Symbol> omega(static_cast<std::size_t>(parity_), 0);
    for (std::size_t i = 0; i < omega.size(); ++i) {
        for (std::size_t j = 0; j <= i && j < lambda.size(); ++j) {
            omega[i] ^= Gf32::mul(lambda[j], synd[i - j]);
        }
    }
    // Formal derivative: odd-degree terms survive in characteristic 2.
    std::vector<Symbol> dlambda(lambda.size() > 1 ? lambda.size() - 1 : 1, 0);
    for (std::size_t i = 1; i < lambda.size(); i += 2) dlambda[i - 1] = lambda[i];

    int corrected = 0;
    for (std::size_t pos : positions) {
        const Symbol x_inv = Gf32::inv(locator_of(pos));
        const Symbol denom = eval_low_first(dlambda, x_inv);
        if (denom == 0) return result;
        const Symbol magnitude = Gf32::div(eval_low_first(omega, x_inv), denom);
        word[pos] ^= magnitude;
        if (magnitude != 0 && !std::binary_search(erased.begin(), erased.end(), pos)) ++corrected;
    }
    if (!is_codeword(word)) return result;

    result.ok = true;
    result.corrected_errors = corrected;
    result.data.assign(word.begin(), word.begin() + static_cast<std::ptrdiff_t>(k));
    return result;
}

} // namespace echoless
