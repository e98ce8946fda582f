#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace seqaug {

using Rng = std::mt19937_64;

inline std::uint64_t fnv1a(std::string_view text, std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the named substream of `seed` ("split", "train", "generate", ...).
/// Substreams are independent of each other and of call order.
inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view name) {
  return splitmix64(seed ^ splitmix64(fnv1a(name)));
}

inline Rng make_rng(std::uint64_t seed, std::string_view stream) {
  return Rng(substream_seed(seed, stream));
}

}  // namespace seqaug
