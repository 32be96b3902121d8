#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace splitflow {

namespace detail {

// Philox4x32-10 block cipher (Salmon et al. 2011), the usual counter-based
// generator for parallel Monte Carlo: the output is a pure function of
// (key, counter), so streams can be indexed by (seed, mode, step) and drawn
// in any order, on any number of threads, with identical results.
struct Philox4x32 {
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::uint64_t key,
                                              std::uint64_t ctr_lo,
                                              std::uint64_t ctr_hi) {
        std::uint32_t x0 = static_cast<std::uint32_t>(ctr_lo);
        std::uint32_t x1 = static_cast<std::uint32_t>(ctr_lo >> 32);
        std::uint32_t x2 = static_cast<std::uint32_t>(ctr_hi);
        std::uint32_t x3 = static_cast<std::uint32_t>(ctr_hi >> 32);
        std::uint32_t k0 = static_cast<std::uint32_t>(key);
        std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x0;
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x2;
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t y0 = hi1 ^ x1 ^ k0;
            const std::uint32_t y1 = lo1;
            const std::uint32_t y2 = hi0 ^ x3 ^ k1;
            const std::uint32_t y3 = lo0;
            x0 = y0;
            x1 = y1;
            x2 = y2;
            x3 = y3;
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        return {x0, x1, x2, x3};
    }
};

// 53-bit uniform in the open interval (0,1); never returns 0, so it is safe
// under a logarithm.
inline double uniform53(std::uint32_t a, std::uint32_t b) {
    const double hi = static_cast<double>(a >> 5);   // 27 bits
    const double lo = static_cast<double>(b >> 6);   // 26 bits
    return (hi * 67108864.0 + lo + 0.5) * (1.0 / 9007199254740992.0);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace detail

struct NormalPair {
    double first;
    double second;
};

// Counter-keyed pair of independent standard normals. Output depends only on
// (seed, mode, step); distinct triples give statistically independent draws.
inline NormalPair rng_stream(std::uint64_t seed, std::uint64_t mode, std::uint64_t step) {
    const auto words = detail::Philox4x32::block(seed, mode, step);
    const double u1 = detail::uniform53(words[0], words[1]);
    const double u2 = detail::uniform53(words[2], words[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

// Derives the seed of Monte Carlo sample `index` from a base seed. Keeps
// per-sample streams disjoint without coordinating counters across samples.
inline std::uint64_t sample_seed(std::uint64_t base_seed, std::uint64_t index) {
    return detail::splitmix64(base_seed ^ detail::splitmix64(index + 1));
}

} // namespace splitflow
