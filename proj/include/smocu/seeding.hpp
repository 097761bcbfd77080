#pragma once

// Deterministic seed derivation. A realization's seed is a hash of the
// master seed and realization id; each consumer inside a realization draws
// from its own named stream so that methods compared at the same realization
// see the same experiment-outcome randomness.

#include <cstdint>

namespace smocu {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t child_seed(std::uint64_t master, std::uint64_t realization) {
    return splitmix64(splitmix64(master) ^ splitmix64(realization + 0x632BE59BD9B4E019ULL));
}

enum class Stream : std::uint64_t {
    benchmark = 0,
    initial_sampling = 1,
    outcomes = 2,
    gp_restarts = 3,
    proposals = 4,
};

inline constexpr std::uint64_t stream_seed(std::uint64_t seed, Stream s) {
    return splitmix64(seed ^ splitmix64(0xA0761D6478BD642FULL + static_cast<std::uint64_t>(s)));
}

}  // namespace smocu
