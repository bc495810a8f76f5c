#pragma once

#include <cmath>
#include <cstdint>

#include "plr/errors.hpp"

namespace plr {

// SplitMix64 (Steele, Lea, Flood 2014). Hand-rolled instead of <random>
// because every byte of simulator output must be reproducible across
// platforms and standard library versions; std:: engines are portable but
// std:: distributions are not.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Unbiased uniform integer in [0, bound) via rejection sampling.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw PreconditionError("next_below: bound must be positive");
        const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x >= threshold) return x % bound;
        }
    }

    // Standard normal via Box-Muller (cosine branch). Two uniforms per call;
    // no state caching so the draw count per call is fixed and auditable.
    double next_gaussian() {
        constexpr double kTwoPi = 6.28318530717958647692;
        double u1 = next_double();
        const double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;  // log(0) guard
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

private:
    std::uint64_t state_;
};

// Finalizer of the SplitMix64 step; used to hash stream coordinates.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream splitting: every consumer forks its own generator keyed by
// (seed, generation, purpose). Adding draws to one stream can then never
// shift the values seen by another, which keeps runs reproducible as the
// simulator grows. Purpose tags live in rng_stream below.
inline SplitMix64 fork_stream(std::uint64_t seed, std::uint64_t generation,
                              std::uint64_t purpose) {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL * (generation + 1));
    h = mix64(h + 0x9e3779b97f4a7c15ULL * (purpose + 1));
    return SplitMix64(h);
}

namespace rng_stream {
// World construction (generation tag 0).
inline constexpr std::uint64_t kIdentityMeans = 1;
inline constexpr std::uint64_t kSampleNoise = 2;
// Per-generation streams.
inline constexpr std::uint64_t kLabelFlips = 3;
inline constexpr std::uint64_t kDrift = 4;
}  // namespace rng_stream

}  // namespace plr
