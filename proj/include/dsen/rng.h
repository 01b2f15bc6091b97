#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dsen {

// splitmix64 finalizer.
inline std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream seed from a base seed and any number of keys (user, day, ...), so
// per-entity draws do not depend on iteration order.
inline std::uint64_t DeriveSeed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = Mix64(seed);
  for (std::uint64_t k : keys) h = Mix64(h ^ Mix64(k));
  return h;
}

inline std::mt19937_64 StreamRng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return std::mt19937_64(DeriveSeed(seed, keys));
}

}  // namespace dsen
