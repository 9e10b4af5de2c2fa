#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace radiomap {

/// Seeded random stream with engine-independent draw algorithms, so the same
/// seed yields the same values on every platform.
struct Rng {
    std::mt19937_64 gen;

    explicit Rng(std::uint64_t seed) : gen(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen() >> 11) * 0x1p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Uniform integer in [0, n) via rejection sampling (no modulo bias).
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r = gen();
        while (r >= limit) r = gen();
        return r % n;
    }

    /// Standard normal via the polar method.
    double normal() {
        while (true) {
            const double u = 2.0 * uniform01() - 1.0;
            const double v = 2.0 * uniform01() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }
};

}  // namespace radiomap
