#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qkdamage {

// All stochastic code draws from this engine. mt19937_64's output sequence is
// fixed by the standard, so uniform() below is portable bit-for-bit.
using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a parent seed and a label.
/// Streams are keyed by name, so adding a new labeled stream never shifts
/// the draws of an existing one.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(parent ^ mix64(h));
}

inline Rng make_rng(std::uint64_t parent, std::string_view label) {
  return Rng{derive_seed(parent, label)};
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double low, double high) {
  return low + (high - low) * uniform(rng);
}

inline bool bernoulli(Rng& rng, double p) { return uniform(rng) < p; }

}  // namespace qkdamage
