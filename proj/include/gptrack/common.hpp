#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>

namespace gptrack {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

// --- error taxonomy (mapped to process exit codes by the CLI) ---

/// Invalid configuration: bad flag values, malformed config files.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent data: malformed CSV, mismatched lengths.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure: non-converging factorization, degenerate weights.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// All unnormalized particle weights underflowed to zero.
struct DegenerateWeightsError : NumericalError {
  using NumericalError::NumericalError;
};

// --- deterministic RNG stream derivation ---
//
// Every stochastic component draws from its own engine seeded by hashing
// a (base seed, context path) tuple, so results are reproducible and
// independent of evaluation order or thread count.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Hash a base seed with a context path into a stream seed.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(base ^ 0x6a09e667f3bcc908ULL);
  for (std::uint64_t p : path) h = splitmix64(h ^ p);
  return h;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(base, path));
}

// Stream identifiers used as the first path element of derive_seed.
namespace stream {
inline constexpr std::uint64_t kTrajectory = 1;
inline constexpr std::uint64_t kMeasurement = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kPropagate = 4;
inline constexpr std::uint64_t kResample = 5;
inline constexpr std::uint64_t kRespread = 6;
inline constexpr std::uint64_t kMixing = 7;
inline constexpr std::uint64_t kRun = 8;
}  // namespace stream

}  // namespace gptrack
