#ifndef DIFFCORR_RANDOM_HPP
#define DIFFCORR_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace diffcorr {

using Rng = std::mt19937_64;

/// Mixes a master seed with stream indices so that each (seed, indices...) gets its own generator.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed);
    for (auto s : stream) {
        h = mix(h ^ mix(s));
    }
    return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
    return Rng(derive_seed(seed, stream));
}

} // namespace diffcorr

#endif
