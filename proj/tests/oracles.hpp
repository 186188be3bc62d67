#pragma once

// Independent reference implementations used only by the tests. Nothing here
// shares code with the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

inline std::vector<double> direct_convolve(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

inline std::complex<double> dft_bin(const std::vector<double>& x, std::size_t k) {
    const double pi = std::acos(-1.0);
    std::complex<double> acc = 0.0;
    const auto n = static_cast<double>(x.size());
    for (std::size_t m = 0; m < x.size(); ++m) {
        acc += x[m] * std::polar(1.0, -2.0 * pi * static_cast<double>(k * m) / n);
    }
    return acc;
}

// Shift-and-add multiply modulo x^5 + x^2 + 1.
inline std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b) {
    unsigned r = 0;
    unsigned x = a;
    for (unsigned y = b; y; y >>= 1) {
        if (y & 1u) r ^= x;
        x <<= 1;
        if (x & 0x20u) x ^= 0x25u;
    }
    return static_cast<std::uint8_t>(r);
}

inline std::uint8_t gf_pow(std::uint8_t a, int e) {
    std::uint8_t r = 1;
    for (int i = 0; i < e; ++i) r = gf_mul(r, a);
    return r;
}

// prod (x - alpha^i), i = 1..parity; highest degree first.
inline std::vector<std::uint8_t> rs_generator(int parity) {
    std::vector<std::uint8_t> g{1};
    for (int i = 1; i <= parity; ++i) {
        const std::uint8_t root = gf_pow(2, i);
        std::vector<std::uint8_t> next(g.size() + 1, 0);
        for (std::size_t j = 0; j < g.size(); ++j) {
            next[j] ^= g[j];
            next[j + 1] ^= gf_mul(g[j], root);
        }
        g = next;
    }
    return g;
}

// Remainder of data(x) * x^parity divided by g(x), by schoolbook long division.
inline std::vector<std::uint8_t> rs_parity_long_division(const std::vector<std::uint8_t>& data, int parity) {
    const auto g = rs_generator(parity);
    std::vector<std::uint8_t> rem(data);
    rem.resize(data.size() + static_cast<std::size_t>(parity), 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::uint8_t lead = rem[i];
        if (!lead) continue;
        for (std::size_t j = 0; j < g.size(); ++j) rem[i + j] ^= gf_mul(g[j], lead);
    }
    return {rem.end() - parity, rem.end()};
}

// Codeword polynomial evaluated at alpha^i (highest degree first).
inline std::uint8_t poly_eval(const std::vector<std::uint8_t>& c, std::uint8_t x) {
    std::uint8_t acc = 0;
    for (auto v : c) acc = static_cast<std::uint8_t>(gf_mul(acc, x) ^ v);
    return acc;
}

inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
        i = j + 1;
    }
    return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    return pearson(ranks(a), ranks(b));
}

// Schroeder backward integration of h^2 and a least-squares slope (dB/s)
// over the [-35, -5] dB range.
inline double schroeder_slope_db_per_s(const std::vector<double>& h, int rate) {
    std::vector<double> edc(h.size());
    double acc = 0.0;
    for (std::size_t i = h.size(); i-- > 0;) {
        acc += h[i] * h[i];
        edc[i] = acc;
    }
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    double n = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double db = 10.0 * std::log10(edc[i] / edc[0]);
        if (db > -5.0 || db < -35.0) continue;
        const double t = static_cast<double>(i) / rate;
        sx += t;
        sy += db;
        sxx += t * t;
        sxy += t * db;
        n += 1.0;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, sigma);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

inline double rel_rms(const std::vector<double>& a, const std::vector<double>& b, std::size_t from, std::size_t to) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = from; i < to; ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

} // namespace oracle
