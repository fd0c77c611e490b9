#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace trust {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Child seed that depends only on the parent seed and the tags, never on call order.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags)
{
    std::uint64_t s = splitmix64(base);
    for (std::uint64_t t : tags)
        s = splitmix64(s ^ splitmix64(t + 0x632be59bd9b4e019ULL));
    return s;
}

// Library distributions are implementation defined; these are not.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline int uniform_index(Rng& rng, int n) { return static_cast<int>(uniform01(rng) * n); }

/// Inverse-CDF draw from a (not necessarily normalized) weight vector.
inline int sample_index(std::span<const double> weights, Rng& rng)
{
    double total = 0.0;
    for (double w : weights)
        total += w;
    double u = uniform01(rng) * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        u -= weights[i];
        if (u < 0.0)
            return static_cast<int>(i);
    }
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0)
            return static_cast<int>(i);
    return 0;
}

} // namespace trust
