#pragma once

// Counter-based random streams. Every random number in the toolkit is a pure
// function of (seed, stream tag, counters), so results never depend on the
// order in which regions, pixels or trials are evaluated.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace speckle::rng {

enum class Stream : std::uint64_t {
  Phase = 0x5048415345ULL,
  Perturbation = 0x5045525455ULL,
  Trial = 0x545249414cULL,
  Noise = 0x4e4f495345ULL,
  Drift = 0x4452494654ULL,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ mix64(v + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t as_counter(std::int64_t v) { return static_cast<std::uint64_t>(v); }

template <class... Counters>
constexpr std::uint64_t key(std::uint64_t seed, Stream stream, Counters... counters) {
  std::uint64_t h = combine(mix64(seed), static_cast<std::uint64_t>(stream));
  ((h = combine(h, as_counter(static_cast<std::int64_t>(counters)))), ...);
  return h;
}

/// Uniform on [0, 1) with 53 random bits.
constexpr double uniform01(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Uniform on (-half_width, half_width].
constexpr double symmetric_uniform(std::uint64_t h, double half_width) {
  return half_width - 2.0 * half_width * uniform01(h);
}

/// Standard normal via Box-Muller on two derived counters.
inline double standard_normal(std::uint64_t h) {
  const double u1 = 1.0 - uniform01(mix64(h ^ 0x1ULL));  // (0, 1]
  const double u2 = uniform01(mix64(h ^ 0x2ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial) {
  return key(base_seed, Stream::Trial, static_cast<std::int64_t>(trial));
}

}  // namespace speckle::rng
