#pragma once

#include <cstdint>
#include <random>

namespace relpose {

using Rng = std::mt19937_64;

// splitmix64; used to derive independent per-run seeds from (base, index)
// so grid sweeps give identical results regardless of execution order.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t base, std::uint64_t index = 0) {
  return Rng(mix_seed(base, index));
}

}  // namespace relpose
