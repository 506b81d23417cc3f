#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace paramtrack {

// All randomness in the toolkit flows from one master seed through
// mix_seed(), so independent components (per-level source runs, noise
// streams, reservoir draws, sweep realizations) get decorrelated,
// reproducible streams regardless of execution order.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
    // FNV-1a over the tag bytes.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derive a sub-seed from (base, tag, indices...). Stable across platforms.
inline std::uint64_t mix_seed(std::uint64_t base, std::string_view tag,
                              std::initializer_list<std::uint64_t> indices = {}) {
    std::uint64_t h = splitmix64(base ^ hash_tag(tag));
    for (std::uint64_t i : indices) h = splitmix64(h ^ i);
    return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double standard_normal(std::mt19937_64& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

} // namespace paramtrack
