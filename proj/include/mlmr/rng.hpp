#pragma once

#include <cstdint>

namespace mlmr {

// The generators below are pinned by this file, not by the platform's
// <random>, so traces reproduce bit-for-bit across machines and standard
// library versions.

namespace detail {

// SplitMix64 finalizer (Stafford mix13 variant used by splitmix64).
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Seed-derivation rule for Monte-Carlo replications: replication r of a run
// with master seed s uses derive_seed(s, r), which is the (r+1)-th output of
// a SplitMix64 stream seeded with s. Distinct replication indices always give
// distinct seeds (mix64 is a bijection applied to distinct inputs).
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
    return detail::mix64(master_seed + index * 0x9E3779B97F4A7C15ULL);
}

// xoshiro256** by Blackman and Vigna, seeded through SplitMix64.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9E3779B97F4A7C15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, bound), bound > 0; rejection keeps it unbiased.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = bound * (UINT64_MAX / bound);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % bound;
    }

private:
    std::uint64_t state_[4];
};

}  // namespace mlmr
