#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace seqmix {

using Rng = std::mt19937_64;

/// Mixes a 64-bit word (splitmix64 finalizer).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child stream seed for (master, replication index, tag). Distinct tags give
/// independent streams; equal tags across methods give coupled streams.
constexpr std::uint64_t child_seed(std::uint64_t master, std::uint64_t index,
                                   std::string_view tag) {
  return mix64(mix64(master ^ mix64(index)) ^ fnv1a(tag));
}

}  // namespace seqmix

namespace seqmix {

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace seqmix
