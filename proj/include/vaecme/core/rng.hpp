#pragma once

#include "vaecme/core/complex_tensor.hpp"

#include <cstdint>
#include <random>

namespace vaecme {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; derives independent stream seeds from (master, index).
constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Rng make_stream(std::uint64_t master, std::uint64_t index) { return Rng(mix_seed(master, index)); }

inline double standard_normal(Rng& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    return n(rng);
}

/// Circularly-symmetric complex normal with unit variance.
inline cplx standard_complex_normal(Rng& rng)
{
    constexpr double s = 0.70710678118654752440;
    const double re = standard_normal(rng);
    const double im = standard_normal(rng);
    return {s * re, s * im};
}

} // namespace vaecme
