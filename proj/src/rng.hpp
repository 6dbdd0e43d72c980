#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ae2 {

// All randomness in the toolkit flows from one config seed. Independent
// streams are derived by mixing the seed with a purpose tag so that, e.g.,
// weight init and pair sampling do not interleave.
inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
  // FNV-1a over the tag, then a splitmix64 finalizer.
  std::uint64_t h = 1469598103934665603ull;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::string_view tag) {
  return std::mt19937_64(mix_seed(seed, tag));
}

}  // namespace ae2
