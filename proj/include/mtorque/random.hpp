#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mtorque {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a path of
/// indices (village, replicate, ...), so parallel work stays reproducible.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t s = splitmix64(base);
    for (auto p : path)
        s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> path = {}) {
    return Rng(derive_seed(base, path));
}

/// Uniform double in [0, 1) built from the top 53 bits, identical on every
/// standard library (unlike std::uniform_real_distribution).
inline double uniform01(Rng &rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng &rng, double p) noexcept { return uniform01(rng) < p; }

/// A single uniform draw in [0, 1) addressed by a seed path, for coins that
/// must not depend on the order in which they are tossed.
inline double keyed_uniform01(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept {
    return static_cast<double>(derive_seed(base, path) >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection; n > 0.
inline std::uint64_t uniform_index(Rng &rng, std::uint64_t n) noexcept {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % n;
}

} // namespace mtorque
