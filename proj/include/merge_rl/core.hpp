#pragma once

#include <cstdint>
#include <random>

namespace merge_rl {

using Rng = std::mt19937_64;

/// 65 mi/h in m/s.
inline constexpr double kSpeedLimit = 29.0576;

/// Longitudinal acceleration bounds of the ego vehicle, m/s^2.
inline constexpr double kAccelMin = -4.5;
inline constexpr double kAccelMax = 2.5;

inline constexpr bool accel_in_range(double a) { return a >= kAccelMin && a <= kAccelMax; }

/// splitmix64 finalizer, used to derive independent child seeds from one run seed.
inline constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline bool bernoulli(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

}  // namespace merge_rl
