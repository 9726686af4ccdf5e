#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mval {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Key a stream by (seed, part, part, ...) so parallel work items draw from
// disjoint, schedule-independent streams.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = splitmix64(seed ^ 0x6d76616cULL);  // "mval"
    for (std::uint64_t p : parts) h = splitmix64(h ^ p);
    return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> parts = {}) {
    return std::mt19937_64(derive_seed(seed, parts));
}

}  // namespace mval
