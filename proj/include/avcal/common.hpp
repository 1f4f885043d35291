#pragma once

#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace avcal {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidAngle : Error {
  using Error::Error;
};
struct NearParallel : Error {
  using Error::Error;
};
struct Underdetermined : Error {
  using Error::Error;
};
struct DegenerateSource : Error {
  using Error::Error;
};
struct ZeroAlpha : Error {
  using Error::Error;
};
struct CoincidentPoint : Error {
  using Error::Error;
};
struct SingularHessian : Error {
  using Error::Error;
};
struct NoConsensus : Error {
  using Error::Error;
};
struct LengthMismatch : Error {
  using Error::Error;
};
struct InfeasiblePlacement : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

/// splitmix64 finalizer; decorrelates derived seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Shared RANSAC configuration (used by both the pose-graph RANSAC and the
// point-pair RANSAC of the coordinate-mapping path)
// ---------------------------------------------------------------------------

struct RansacConfig {
  int max_iterations = 50;
  double inlier_threshold = 0.1;        // meters
  double min_consensus_fraction = 0.6;  // fraction of observations / pairs
  std::uint64_t seed = 0;
  bool refit_feedback = true;
};

}  // namespace avcal
