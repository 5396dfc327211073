#pragma once

#include <cstdint>
#include <random>
#include <vector>

// Deterministic sampling helpers. std::shuffle and the distribution classes
// are implementation-defined, so seeded runs would differ across standard
// libraries; these draw from the (fully specified) mt19937 stream directly.

namespace cseg {

/// Uniform integer in [0, bound) by rejection sampling (no modulo bias).
inline std::uint32_t bounded_rand(std::mt19937& gen, std::uint32_t bound) {
    const std::uint32_t limit = UINT32_MAX - UINT32_MAX % bound;
    std::uint32_t r;
    do {
        r = gen();
    } while (r >= limit);
    return r % bound;
}

/// Uniform double in [0, 1) with 24-bit resolution.
inline double unit_rand(std::mt19937& gen) {
    return (gen() >> 8) * (1.0 / 16777216.0);
}

/// Fisher-Yates shuffle driven by bounded_rand.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937& gen) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[bounded_rand(gen, static_cast<std::uint32_t>(i))]);
}

}  // namespace cseg
