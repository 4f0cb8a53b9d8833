#pragma once

#include <cstdint>
#include <random>

namespace hyperslim {

// Uniform on [0, 1) with 53 random bits. Spelled out instead of using
// std::uniform_real_distribution so streams are identical across standard
// library implementations.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

// splitmix64 finalizer over (seed, stream); used to derive independent
// sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace hyperslim
