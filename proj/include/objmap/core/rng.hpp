// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace objmap {

// splitmix64 step, used to derive well-separated substream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Combine a base seed with stream tags (frame id, object id, stage, ...)
// so every consumer owns an independent deterministic stream.
template <typename... Tags>
std::uint64_t substream(std::uint64_t base, Tags... tags) {
  std::uint64_t s = mix_seed(base);
  ((s = mix_seed(s ^ static_cast<std::uint64_t>(tags))), ...);
  return s;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

}  // namespace objmap
