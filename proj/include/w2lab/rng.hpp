#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace w2lab {

/// The single random engine type used everywhere. Never shared between threads.
using Rng = std::mt19937_64;

/// splitmix64 finalizer; bijective mixing of a 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a; stable across platforms (used for stream tags and config hashes).
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed splitting rule: seed(root, stream, job) = mix64(mix64(root ^ fnv1a64(stream)) + job).
/// Every parallel job derives its engine from this, so results never depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t job = 0) noexcept {
  return mix64(mix64(root ^ fnv1a64(stream)) + job);
}

inline Rng make_rng(std::uint64_t root, std::string_view stream, std::uint64_t job = 0) {
  return Rng(derive_seed(root, stream, job));
}

}  // namespace w2lab
