#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "avcal/common.hpp"

namespace avcal {

// ---------------------------------------------------------------------------
// Basic 2D types
// ---------------------------------------------------------------------------

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }

  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// Positions are plain 2D vectors in meters.
using Position2D = Vec2;

// ---------------------------------------------------------------------------
// Angles, wrapped to (-pi, pi]
// ---------------------------------------------------------------------------

/// Wraps a raw angle in radians into (-pi, pi].
inline double wrap_radians(double raw) {
  if (!std::isfinite(raw)) throw InvalidAngle("non-finite angle");
  double r = std::remainder(raw, kTwoPi);  // in [-pi, pi]
  if (r <= -kPi) r += kTwoPi;              // boundary: -pi maps to +pi
  return r;
}

/// An angle in radians, kept wrapped to (-pi, pi] through all arithmetic.
class Angle {
 public:
  Angle() = default;
  explicit Angle(double radians) : value_(wrap_radians(radians)) {}

  static Angle from_degrees(double deg) { return Angle(deg_to_rad(deg)); }

  double radians() const { return value_; }
  double degrees() const { return rad_to_deg(value_); }

  Angle operator+(Angle o) const { return Angle(value_ + o.value_); }
  Angle operator-(Angle o) const { return Angle(value_ - o.value_); }
  Angle operator-() const { return Angle(-value_); }

  bool operator==(const Angle&) const = default;

 private:
  double value_ = 0.0;
};

inline Angle wrap_angle(double raw_radians) { return Angle(raw_radians); }

/// Unit vector (cos a, sin a) of an angle.
inline Vec2 doa_unit_vector(Angle a) {
  return {std::cos(a.radians()), std::sin(a.radians())};
}

/// Angle of a vector, atan2 convention.
inline Angle bearing_of(const Vec2& v) { return Angle(std::atan2(v.y, v.x)); }

// ---------------------------------------------------------------------------
// Sensors and observations
// ---------------------------------------------------------------------------

enum class Modality { Acoustic, Visual };

struct SensorPose {
  Position2D position;
  Angle orientation;
  Modality modality = Modality::Acoustic;
};

/// Converts a DoA measured in the sensor's local frame to a world bearing.
inline Angle global_bearing(const SensorPose& pose, Angle local_doa) {
  return pose.orientation + local_doa;
}

enum class DetectionStatus {
  Detection,
  MissedDetection,
  FalseDetection,
  NoDetection,
};

/// True when the status carries a usable angle.
inline bool has_angle(DetectionStatus s) {
  return s == DetectionStatus::Detection || s == DetectionStatus::FalseDetection;
}

struct DoaObservation {
  int sensor_index = 0;
  int time_index = 0;
  std::optional<Angle> angle;  // present iff has_angle(status)
  Modality modality = Modality::Acoustic;
  DetectionStatus status = DetectionStatus::NoDetection;

  bool observed() const { return has_angle(status); }
};

// ---------------------------------------------------------------------------
// Line intersections
// ---------------------------------------------------------------------------

inline constexpr double kDefaultParallelThreshold = 1e-6;

/// Intersection of the full lines through each position along its bearing,
/// or nullopt when |sin(bearing difference)| < threshold. Bearings are world
/// bearings; the DoA axes are treated as undirected lines.
inline std::optional<Position2D> try_ray_intersection(
    const Position2D& pos_a, Angle bearing_a, const Position2D& pos_b,
    Angle bearing_b, double parallel_threshold = kDefaultParallelThreshold) {
  const Vec2 da = doa_unit_vector(bearing_a);
  const Vec2 db = doa_unit_vector(bearing_b);
  const double det = da.cross(db);  // sin(bearing_b - bearing_a)
  if (std::abs(det) < parallel_threshold) return std::nullopt;
  const Vec2 rhs = pos_b - pos_a;
  const double t = rhs.cross(db) / det;
  return pos_a + t * da;
}

inline Position2D ray_intersection(
    const SensorPose& pose_a, Angle bearing_a, const SensorPose& pose_b,
    Angle bearing_b, double parallel_threshold = kDefaultParallelThreshold) {
  auto p = try_ray_intersection(pose_a.position, bearing_a, pose_b.position,
                                bearing_b, parallel_threshold);
  if (!p) throw NearParallel("DoA axes are near-parallel");
  return *p;
}

struct EventLocalization {
  Position2D position;
  double spread = 0.0;  // mean distance of intersections from the mean
};

/// Localizes an event as the mean of all pairwise line intersections of the
/// given world bearings; near-parallel pairs are skipped. `spread` is the
/// mean distance of the intersections from that mean.
inline EventLocalization localize_event(
    std::span<const SensorPose> poses, std::span<const Angle> bearings,
    double parallel_threshold = kDefaultParallelThreshold) {
  if (poses.size() != bearings.size())
    throw LengthMismatch("poses/bearings size mismatch");
  const std::size_t n = poses.size();
  if (n < 2) throw Underdetermined("need at least 2 bearings");

  std::vector<Position2D> intersections;
  intersections.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      auto p = try_ray_intersection(poses[i].position, bearings[i],
                                    poses[j].position, bearings[j],
                                    parallel_threshold);
      if (p) intersections.push_back(*p);
    }
  }
  if (intersections.empty())
    throw Underdetermined("all bearing pairs near-parallel");

  Vec2 mean{0.0, 0.0};
  for (const auto& p : intersections) mean += p;
  mean = mean / static_cast<double>(intersections.size());

  double spread = 0.0;
  for (const auto& p : intersections) spread += distance(p, mean);
  spread /= static_cast<double>(intersections.size());
  return {mean, spread};
}

/// For each sensor, the mean distance between `event_hypothesis` and the
/// pairwise intersections involving that sensor. Sensors whose pairs are all
/// near-parallel get +infinity (they can never pass an inlier gate).
inline std::vector<double> per_sensor_consistency(
    std::span<const SensorPose> poses, std::span<const Angle> bearings,
    const Position2D& event_hypothesis,
    double parallel_threshold = kDefaultParallelThreshold) {
  if (poses.size() != bearings.size())
    throw LengthMismatch("poses/bearings size mismatch");
  const std::size_t n = poses.size();
  if (n < 2) throw Underdetermined("need at least 2 bearings");

  std::vector<double> sum(n, 0.0);
  std::vector<int> count(n, 0);
  bool any = false;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      auto p = try_ray_intersection(poses[i].position, bearings[i],
                                    poses[j].position, bearings[j],
                                    parallel_threshold);
      if (!p) continue;
      any = true;
      const double d = distance(*p, event_hypothesis);
      sum[i] += d;
      sum[j] += d;
      ++count[i];
      ++count[j];
    }
  }
  if (!any) throw Underdetermined("all bearing pairs near-parallel");

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = count[i] > 0 ? sum[i] / count[i]
                          : std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace avcal
