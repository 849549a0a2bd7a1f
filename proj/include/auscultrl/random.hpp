#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace auscultrl {

using Rng = std::mt19937_64;

// Derives an independent stream seed from a base seed and a list of tags
// (repeat index, fold index, role...). Stable across runs.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    auto mix = [](std::uint64_t x) {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    std::uint64_t h = mix(base);
    for (auto t : tags) h = mix(h ^ mix(t + 0x632be59bd9b4e019ULL));
    return h;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

} // namespace auscultrl
