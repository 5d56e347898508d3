#pragma once

// Small deterministic hashing utilities. Everything downstream of a seed must
// be reproducible byte-for-byte across runs and platforms, so we avoid
// std::hash and the unspecified std <random> distributions.

#include <cstdint>
#include <string_view>

namespace gradsyn::detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Uniform double in [0, 1) from the 53 high bits.
inline double unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Deterministic counter-based stream: value i of stream (seed, tag).
struct HashStream {
  std::uint64_t state;

  explicit HashStream(std::uint64_t seed, std::uint64_t tag = 0) : state(mix(seed, tag)) {}

  std::uint64_t next() { return splitmix64(state); }
  double next_unit() { return unit_double(next()); }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }
};

}  // namespace gradsyn::detail
