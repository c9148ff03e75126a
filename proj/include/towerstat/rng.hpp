#pragma once

#include <cstdint>
#include <random>

namespace towerstat {

using Rng = std::mt19937_64;

// splitmix64 finaliser, used to derive independent sub-seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for replica `index` of stream `stream` under a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index) {
  return mix64(mix64(mix64(master) ^ stream) + index);
}

/// Uniform on [0,1) with 53 random bits; bit-identical across platforms.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0,1].
inline double uniform_open0(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace towerstat
