#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ecc {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Every random stream in a run is derived from (seed, purpose tag, index), so
// streams for different purposes never overlap and adding a consumer does not
// shift the others.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
  return mix64(mix64(seed ^ hash_tag(tag)) + mix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, tag, index));
}

}  // namespace ecc
