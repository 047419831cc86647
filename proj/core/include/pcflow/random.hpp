// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded RNG with self-contained distributions. std::mt19937_64 output is
// specified by the standard, and the uniform/normal transforms below avoid
// the implementation-defined std::*_distribution wrappers, so any sequence
// drawn here is bit-reproducible across compilers and platforms.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace pcflow {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Decorrelated sub-stream (parameters vs. data vs. noise, ...).
    Rng(std::uint64_t seed, std::uint64_t stream)
        : eng_(seed ^ (0x9e3779b97f4a7c15ull * (stream + 1))) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; caches the spare draw.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform index in [0, n).
    std::int64_t index(std::int64_t n) {
        auto i = static_cast<std::int64_t>(uniform() * static_cast<double>(n));
        return i >= n ? n - 1 : i;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace pcflow
