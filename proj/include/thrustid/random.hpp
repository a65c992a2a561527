#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace thrustid {

/// Seeded permutation of 0..n-1. Fisher-Yates over mt19937_64, whose output
/// sequence is fixed by the standard, so results match across toolchains.
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

} // namespace thrustid
