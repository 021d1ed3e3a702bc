#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <string_view>

namespace cbd {

/// All randomness flows through this engine; the variate helpers below are
/// written out so streams are identical across standard libraries.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed for a stream identified by `parts` under `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(master);
  for (const auto p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Box-Muller; one normal per call.
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Standard Cauchy by inverse CDF.
inline double standard_cauchy(Rng& rng) { return std::tan(std::numbers::pi * (uniform01(rng) - 0.5)); }

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

}  // namespace cbd
