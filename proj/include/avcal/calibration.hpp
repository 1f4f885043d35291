#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "avcal/observations.hpp"

namespace avcal {

// ---------------------------------------------------------------------------
// Joint audio-visual geometry calibration.
//
// Each observed DoA contributes the squared inner product between its
// measured unit vector and the unit vector predicted from the geometry; both
// are unit length, so every summand equals cos^2(psi) with
//   psi = bearing(event - sensor) - orientation - measured_doa.
// Acoustic sensor poses and event positions are free variables; visual poses
// are fixed anchors. The sum is maximized by a damped Newton iteration on
// its stationarity conditions.
// ---------------------------------------------------------------------------

enum class CalibrationMode {
  Relative,  // acoustic terms only; gauge fixed (see solve)
  Joint,     // acoustic + visual terms; visual anchors fix the gauge
};

struct GeometryVariables {
  std::vector<Position2D> sensor_positions;  // length I
  std::vector<Angle> sensor_orientations;    // length I
  std::vector<Position2D> events;            // length T

  int num_sensors() const { return static_cast<int>(sensor_positions.size()); }
  int num_events() const { return static_cast<int>(events.size()); }
};

struct GeometryEstimate {
  GeometryVariables variables;
  double objective_value = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SolverConfig {
  int max_iterations = 100;
  double step_tol = 1e-12;
  double grad_tol = 1e-12;
  double lambda_init = 1e-3;
  double lambda_min = 1e-12;
  double lambda_max = 1e12;
  int restarts = 5;  // independent initializations; best objective wins
  std::uint64_t seed = 0;
  double eps_dist = 1e-6;  // sensor/event coincidence guard, meters
};

/// Smallest event count T with T * (I + K - 2) > 3 I. Counting unknowns
/// (3 per acoustic sensor, 2 per event) against observations per event.
inline int minimal_event_count(int I, int K) {
  if (I < 1 || I + K <= 2)
    throw Underdetermined("need I >= 1 and I + K > 2 sensors");
  return (3 * I) / (I + K - 2) + 1;
}

/// Measurement prediction: the world direction from sensor to event rotated
/// into the sensor's local frame.
inline Vec2 predict_doa_vector(const SensorPose& pose, const Position2D& event,
                               double eps_dist = 1e-6) {
  const Vec2 d = event - pose.position;
  const double r = d.norm();
  if (r <= eps_dist) throw CoincidentPoint("event coincides with sensor");
  const Vec2 u = d / r;
  const double c = std::cos(pose.orientation.radians());
  const double s = std::sin(pose.orientation.radians());
  return {c * u.x + s * u.y, -s * u.x + c * u.y};
}

namespace detail {

/// Variable layout of the full (ungauged) problem:
/// [m_0.x, m_0.y, ..., m_{I-1}.x, m_{I-1}.y, theta_0..theta_{I-1},
///  e_0.x, e_0.y, ..., e_{T-1}.x, e_{T-1}.y]
inline int full_dim(int I, int T) { return 3 * I + 2 * T; }
inline int pos_index(int i) { return 2 * i; }
inline int theta_index(int I, int i) { return 2 * I + i; }
inline int event_index(int I, int t) { return 3 * I + 2 * t; }

inline Eigen::VectorXd pack(const GeometryVariables& vars) {
  const int I = vars.num_sensors();
  const int T = vars.num_events();
  Eigen::VectorXd z(full_dim(I, T));
  for (int i = 0; i < I; ++i) {
    z[pos_index(i)] = vars.sensor_positions[i].x;
    z[pos_index(i) + 1] = vars.sensor_positions[i].y;
    z[theta_index(I, i)] = vars.sensor_orientations[i].radians();
  }
  for (int t = 0; t < T; ++t) {
    z[event_index(I, t)] = vars.events[t].x;
    z[event_index(I, t) + 1] = vars.events[t].y;
  }
  return z;
}

inline GeometryVariables unpack(const Eigen::VectorXd& z, int I, int T) {
  GeometryVariables vars;
  vars.sensor_positions.resize(I);
  vars.sensor_orientations.resize(I);
  vars.events.resize(T);
  for (int i = 0; i < I; ++i) {
    vars.sensor_positions[i] = {z[pos_index(i)], z[pos_index(i) + 1]};
    vars.sensor_orientations[i] = Angle(z[theta_index(I, i)]);
  }
  for (int t = 0; t < T; ++t)
    vars.events[t] = {z[event_index(I, t)], z[event_index(I, t) + 1]};
  return vars;
}

/// One observation term evaluated at (sensor position, orientation, event).
/// Returns cos^2(psi) and accumulates d/dpsi chain pieces on demand.
struct TermWorkspace {
  double value = 0.0;
  double sin2psi = 0.0;
  double cos2psi = 0.0;
  Vec2 w;           // d psi / d event = (-dy, dx) / r^2
  double a00 = 0.0; // bearing Hessian entries (symmetric, traceless)
  double a01 = 0.0;
};

inline TermWorkspace eval_term(const Vec2& sensor_pos, double orientation,
                               double measured, const Vec2& event,
                               double eps_dist) {
  const Vec2 d = event - sensor_pos;
  const double r2 = d.squared_norm();
  if (r2 <= eps_dist * eps_dist)
    throw CoincidentPoint("event coincides with sensor");
  TermWorkspace ws;
  const double psi =
      wrap_radians(std::atan2(d.y, d.x) - orientation - measured);
  const double c = std::cos(psi);
  ws.value = c * c;
  ws.sin2psi = std::sin(2.0 * psi);
  ws.cos2psi = std::cos(2.0 * psi);
  ws.w = {-d.y / r2, d.x / r2};
  const double r4 = r2 * r2;
  ws.a00 = 2.0 * d.x * d.y / r4;
  ws.a01 = (d.y * d.y - d.x * d.x) / r4;
  return ws;
}

}  // namespace detail

/// Objective of the calibration: sum of squared inner products between
/// measured and predicted DoA unit vectors over all unmasked entries.
/// Relative mode uses the acoustic table only.
inline double objective(const GeometryVariables& vars,
                        const ObservationSet& obs, CalibrationMode mode,
                        double eps_dist = 1e-6) {
  const int I = obs.num_acoustic;
  const int T = obs.num_events;
  double f = 0.0;
  for (int i = 0; i < I; ++i) {
    for (int t = 0; t < T; ++t) {
      const auto& o = obs.acoustic_at(i, t);
      if (!o.observed()) continue;
      f += detail::eval_term(vars.sensor_positions[i],
                             vars.sensor_orientations[i].radians(),
                             o.angle->radians(), vars.events[t], eps_dist)
               .value;
    }
  }
  if (mode == CalibrationMode::Joint) {
    for (int k = 0; k < obs.num_visual; ++k) {
      for (int t = 0; t < T; ++t) {
        const auto& o = obs.visual_at(k, t);
        if (!o.observed()) continue;
        f += detail::eval_term(obs.visual_poses[k].position,
                               obs.visual_poses[k].orientation.radians(),
                               o.angle->radians(), vars.events[t], eps_dist)
                 .value;
      }
    }
  }
  return f;
}

/// Analytic gradient over the full variable vector in the documented layout
/// (sensor positions, then orientations, then events).
inline Eigen::VectorXd objective_gradient(const GeometryVariables& vars,
                                          const ObservationSet& obs,
                                          CalibrationMode mode,
                                          double eps_dist = 1e-6) {
  const int I = obs.num_acoustic;
  const int T = obs.num_events;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(detail::full_dim(I, T));
  for (int i = 0; i < I; ++i) {
    for (int t = 0; t < T; ++t) {
      const auto& o = obs.acoustic_at(i, t);
      if (!o.observed()) continue;
      const auto ws = detail::eval_term(
          vars.sensor_positions[i], vars.sensor_orientations[i].radians(),
          o.angle->radians(), vars.events[t], eps_dist);
      const int ei = detail::event_index(I, t);
      const int mi = detail::pos_index(i);
      // d(cos^2 psi)/dx = -sin(2 psi) * dpsi/dx
      g[ei] += -ws.sin2psi * ws.w.x;
      g[ei + 1] += -ws.sin2psi * ws.w.y;
      g[mi] += ws.sin2psi * ws.w.x;
      g[mi + 1] += ws.sin2psi * ws.w.y;
      g[detail::theta_index(I, i)] += ws.sin2psi;
    }
  }
  if (mode == CalibrationMode::Joint) {
    for (int k = 0; k < obs.num_visual; ++k) {
      for (int t = 0; t < T; ++t) {
        const auto& o = obs.visual_at(k, t);
        if (!o.observed()) continue;
        const auto ws = detail::eval_term(
            obs.visual_poses[k].position,
            obs.visual_poses[k].orientation.radians(), o.angle->radians(),
            vars.events[t], eps_dist);
        const int ei = detail::event_index(I, t);
        g[ei] += -ws.sin2psi * ws.w.x;
        g[ei + 1] += -ws.sin2psi * ws.w.y;
      }
    }
  }
  return g;
}

namespace detail {

/// Objective, gradient and Hessian in one pass over the tables.
inline double objective_grad_hess(const GeometryVariables& vars,
                                  const ObservationSet& obs,
                                  CalibrationMode mode, double eps_dist,
                                  Eigen::VectorXd& g, Eigen::MatrixXd& H) {
  const int I = obs.num_acoustic;
  const int T = obs.num_events;
  const int n = full_dim(I, T);
  g = Eigen::VectorXd::Zero(n);
  H = Eigen::MatrixXd::Zero(n, n);
  double f = 0.0;

  // Scatters one term's 5-variable (or 2-variable, for anchored sensors)
  // contribution. psi depends on (event, position, orientation) through
  // psi = atan2(event - position) - orientation - measurement.
  auto accumulate = [&](const Vec2& sensor_pos, double orientation,
                        double measured, const Vec2& event, int mi, int thi,
                        int ei, bool sensor_free) {
    const auto ws = eval_term(sensor_pos, orientation, measured, event,
                              eps_dist);
    f += ws.value;
    const double gpsi = -ws.sin2psi;   // d term / d psi
    const double hpsi = -2.0 * ws.cos2psi;  // d^2 term / d psi^2

    // First derivatives of psi per variable.
    const double pz[5] = {ws.w.x, ws.w.y, -ws.w.x, -ws.w.y, -1.0};
    const int idx[5] = {ei, ei + 1, mi, mi + 1, thi};
    const int nv = sensor_free ? 5 : 2;

    for (int a = 0; a < nv; ++a) g[idx[a]] += gpsi * pz[a];

    // Rank-one curvature part.
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < nv; ++b) H(idx[a], idx[b]) += hpsi * pz[a] * pz[b];

    // Bearing-Hessian part: A on (e,e) and (m,m), -A on the cross blocks.
    const double A[2][2] = {{ws.a00, ws.a01}, {ws.a01, -ws.a00}};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        H(ei + a, ei + b) += gpsi * A[a][b];
        if (sensor_free) {
          H(mi + a, mi + b) += gpsi * A[a][b];
          H(ei + a, mi + b) -= gpsi * A[a][b];
          H(mi + a, ei + b) -= gpsi * A[a][b];
        }
      }
  };

  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t) {
      const auto& o = obs.acoustic_at(i, t);
      if (!o.observed()) continue;
      accumulate(vars.sensor_positions[i],
                 vars.sensor_orientations[i].radians(), o.angle->radians(),
                 vars.events[t], pos_index(i), theta_index(I, i),
                 event_index(I, t), true);
    }
  if (mode == CalibrationMode::Joint)
    for (int k = 0; k < obs.num_visual; ++k)
      for (int t = 0; t < T; ++t) {
        const auto& o = obs.visual_at(k, t);
        if (!o.observed()) continue;
        accumulate(obs.visual_poses[k].position,
                   obs.visual_poses[k].orientation.radians(),
                   o.angle->radians(), vars.events[t], 0, 0,
                   event_index(I, t), false);
      }
  return f;
}

// -------------------------------------------------------------------------
// Gauge handling for the relative (acoustic-only) problem. The similarity
// freedom is removed by variable elimination: sensor 0 stays at the origin
// with orientation 0, sensor 1 stays on the unit circle and keeps only its
// direction angle eta as a variable.
// -------------------------------------------------------------------------

/// Maps the variables onto the canonical gauge: sensor 0 at origin with
/// orientation 0, |sensor 1 position| = 1. The objective is invariant.
inline GeometryVariables canonicalize_gauge(const GeometryVariables& vars) {
  GeometryVariables out = vars;
  const int I = out.num_sensors();
  if (I < 2) throw Underdetermined("relative mode needs >= 2 sensors");
  const Vec2 origin = out.sensor_positions[0];
  const double rot = -out.sensor_orientations[0].radians();
  const double c = std::cos(rot), s = std::sin(rot);
  auto xform = [&](const Vec2& p) -> Vec2 {
    const Vec2 q = p - origin;
    return {c * q.x - s * q.y, s * q.x + c * q.y};
  };
  for (auto& p : out.sensor_positions) p = xform(p);
  for (auto& e : out.events) e = xform(e);
  for (auto& th : out.sensor_orientations) th = Angle(th.radians() + rot);

  const double base = out.sensor_positions[1].norm();
  if (base <= 0.0)
    throw Underdetermined("sensors 0 and 1 coincide; scale gauge undefined");
  for (auto& p : out.sensor_positions) p = p / base;
  for (auto& e : out.events) e = e / base;
  return out;
}

/// Reduced free-variable dimension in relative mode:
/// [eta, m_2.., m_{I-1} (2 each), theta_1..theta_{I-1}, events].
inline int reduced_dim(int I, int T) { return 3 * I - 4 + 2 * T; }

inline Eigen::VectorXd reduce_pack(const GeometryVariables& vars) {
  const int I = vars.num_sensors();
  const int T = vars.num_events();
  Eigen::VectorXd z(reduced_dim(I, T));
  int p = 0;
  z[p++] = std::atan2(vars.sensor_positions[1].y, vars.sensor_positions[1].x);
  for (int i = 2; i < I; ++i) {
    z[p++] = vars.sensor_positions[i].x;
    z[p++] = vars.sensor_positions[i].y;
  }
  for (int i = 1; i < I; ++i) z[p++] = vars.sensor_orientations[i].radians();
  for (int t = 0; t < T; ++t) {
    z[p++] = vars.events[t].x;
    z[p++] = vars.events[t].y;
  }
  return z;
}

inline GeometryVariables reduce_unpack(const Eigen::VectorXd& z, int I,
                                       int T) {
  GeometryVariables vars;
  vars.sensor_positions.resize(I);
  vars.sensor_orientations.assign(I, Angle(0.0));
  vars.events.resize(T);
  int p = 0;
  vars.sensor_positions[0] = {0.0, 0.0};
  const double eta = z[p++];
  vars.sensor_positions[1] = {std::cos(eta), std::sin(eta)};
  for (int i = 2; i < I; ++i) {
    vars.sensor_positions[i] = {z[p], z[p + 1]};
    p += 2;
  }
  for (int i = 1; i < I; ++i) vars.sensor_orientations[i] = Angle(z[p++]);
  for (int t = 0; t < T; ++t) {
    vars.events[t] = {z[p], z[p + 1]};
    p += 2;
  }
  return vars;
}

/// Projects the full gradient/Hessian into the reduced space. `eta` is the
/// direction angle of sensor 1; its tangent is t = (-sin eta, cos eta) and
/// the second-derivative correction along d^2 m_1 / d eta^2 = -m_1 applies.
inline void reduce_system(const Eigen::VectorXd& g_full,
                          const Eigen::MatrixXd& H_full, int I, int T,
                          double eta, Eigen::VectorXd& g,
                          Eigen::MatrixXd& H) {
  const int n = reduced_dim(I, T);
  // Sparse map: reduced index -> full index, with eta handled separately.
  std::vector<int> map;
  map.reserve(n - 1);
  for (int i = 2; i < I; ++i) {
    map.push_back(pos_index(i));
    map.push_back(pos_index(i) + 1);
  }
  for (int i = 1; i < I; ++i) map.push_back(theta_index(I, i));
  for (int t = 0; t < T; ++t) {
    map.push_back(event_index(I, t));
    map.push_back(event_index(I, t) + 1);
  }

  const double tx = -std::sin(eta), ty = std::cos(eta);
  const int m1x = pos_index(1), m1y = pos_index(1) + 1;

  g.resize(n);
  H.resize(n, n);
  g[0] = tx * g_full[m1x] + ty * g_full[m1y];
  for (int a = 0; a < n - 1; ++a) g[a + 1] = g_full[map[a]];

  H(0, 0) = tx * (H_full(m1x, m1x) * tx + H_full(m1x, m1y) * ty) +
            ty * (H_full(m1y, m1x) * tx + H_full(m1y, m1y) * ty) +
            g_full[m1x] * (-std::cos(eta)) + g_full[m1y] * (-std::sin(eta));
  for (int a = 0; a < n - 1; ++a) {
    const double h = tx * H_full(m1x, map[a]) + ty * H_full(m1y, map[a]);
    H(0, a + 1) = h;
    H(a + 1, 0) = h;
    for (int b = 0; b < n - 1; ++b) H(a + 1, b + 1) = H_full(map[a], map[b]);
  }
}

}  // namespace detail

/// Starting point for the solver. Joint mode: events from visual-only
/// triangulation where two or more cameras saw them (room center otherwise),
/// acoustic positions uniform over the anchor bounding box, orientations by
/// a circular least-squares fit against the initialized events. Relative
/// mode: sensor 0 at the origin with orientation 0, everything else random.
inline GeometryVariables initialize(const ObservationSet& obs,
                                    CalibrationMode mode, Rng& rng) {
  const int I = obs.num_acoustic;
  const int K = obs.num_visual;
  const int T = obs.num_events;

  GeometryVariables vars;
  vars.sensor_positions.resize(I);
  vars.sensor_orientations.assign(I, Angle(0.0));
  vars.events.resize(T);

  if (mode == CalibrationMode::Joint) {
    // Working bounds from the known anchors.
    double lox = obs.visual_poses.empty() ? 0.0 : obs.visual_poses[0].position.x;
    double hix = lox, loy = 0.0, hiy = 0.0;
    if (!obs.visual_poses.empty()) {
      loy = hiy = obs.visual_poses[0].position.y;
      for (const auto& vp : obs.visual_poses) {
        lox = std::min(lox, vp.position.x);
        hix = std::max(hix, vp.position.x);
        loy = std::min(loy, vp.position.y);
        hiy = std::max(hiy, vp.position.y);
      }
    }
    const Vec2 center{(lox + hix) / 2.0, (loy + hiy) / 2.0};

    for (int t = 0; t < T; ++t) {
      std::vector<SensorPose> poses;
      std::vector<Angle> bearings;
      for (int k = 0; k < K; ++k) {
        const auto& o = obs.visual_at(k, t);
        if (!o.observed()) continue;
        poses.push_back(obs.visual_poses[k]);
        bearings.push_back(global_bearing(obs.visual_poses[k], *o.angle));
      }
      if (poses.size() >= 2) {
        try {
          vars.events[t] = localize_event(poses, bearings).position;
          continue;
        } catch (const Underdetermined&) {
        }
      }
      vars.events[t] = center;
    }

    std::uniform_real_distribution<double> ux(lox, hix), uy(loy, hiy);
    for (int i = 0; i < I; ++i) vars.sensor_positions[i] = {ux(rng), uy(rng)};
  } else {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> uang(-kPi, kPi);
    vars.sensor_positions[0] = {0.0, 0.0};
    for (int i = 1; i < I; ++i)
      vars.sensor_positions[i] = {unit(rng), unit(rng)};
    for (int i = 1; i < I; ++i) vars.sensor_orientations[i] = Angle(uang(rng));
    for (int t = 0; t < T; ++t) vars.events[t] = {unit(rng), unit(rng)};
    return vars;
  }

  // Circular least-squares orientation fit: the residual bearing offset
  // that best explains the observed angles toward the initialized events.
  for (int i = 0; i < I; ++i) {
    std::complex<double> acc{0.0, 0.0};
    for (int t = 0; t < T; ++t) {
      const auto& o = obs.acoustic_at(i, t);
      if (!o.observed()) continue;
      const Vec2 d = vars.events[t] - vars.sensor_positions[i];
      if (d.squared_norm() <= 0.0) continue;
      acc += std::polar(1.0, std::atan2(d.y, d.x) - o.angle->radians());
    }
    vars.sensor_orientations[i] =
        std::abs(acc) > 0.0 ? Angle(std::arg(acc)) : Angle(0.0);
  }
  return vars;
}

namespace detail {

/// Single damped Newton ascent from one starting point.
inline GeometryEstimate newton_ascent(const GeometryVariables& start,
                                      const ObservationSet& obs,
                                      CalibrationMode mode,
                                      const SolverConfig& cfg) {
  const int I = obs.num_acoustic;
  const int T = obs.num_events;
  const bool relative = mode == CalibrationMode::Relative;

  GeometryVariables vars = relative ? canonicalize_gauge(start) : start;
  Eigen::VectorXd z = relative ? reduce_pack(vars) : pack(vars);

  auto unpack_z = [&](const Eigen::VectorXd& zz) {
    return relative ? reduce_unpack(zz, I, T) : unpack(zz, I, T);
  };

  auto eval_f = [&](const Eigen::VectorXd& zz) -> std::optional<double> {
    try {
      return objective(unpack_z(zz), obs, mode, cfg.eps_dist);
    } catch (const CoincidentPoint&) {
      return std::nullopt;
    }
  };

  std::optional<double> f0 = eval_f(z);
  if (!f0) throw CoincidentPoint("initial geometry has coincident points");
  double f = *f0;

  double lambda = cfg.lambda_init;
  bool converged = false;
  int iterations = 0;

  Eigen::VectorXd g_full, g;
  Eigen::MatrixXd H_full, H;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    iterations = iter + 1;
    vars = unpack_z(z);
    objective_grad_hess(vars, obs, mode, cfg.eps_dist, g_full, H_full);
    if (relative) {
      reduce_system(g_full, H_full, I, T, z[0], g, H);
    } else {
      g = g_full;
      H = H_full;
    }
    if (g.norm() < cfg.grad_tol) {
      converged = true;
      break;
    }

    bool accepted = false;
    while (lambda <= cfg.lambda_max) {
      // Ascent step: H is pushed toward negative definite by -lambda I.
      Eigen::MatrixXd A = H;
      A.diagonal().array() -= lambda;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
      if (ldlt.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd step = ldlt.solve(-g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd z_new = z + step;
      const std::optional<double> f_new = eval_f(z_new);
      if (f_new && *f_new >= f) {
        z = z_new;
        f = *f_new;
        lambda = std::max(lambda / 10.0, cfg.lambda_min);
        accepted = true;
        if (step.norm() < cfg.step_tol) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No admissible ascent step at any damping level: either we are at a
      // stationary point (small gradient already handled) or stuck.
      if (!std::isfinite(f)) throw SingularHessian("newton step unsolvable");
      break;
    }
    if (converged) break;
  }

  GeometryEstimate est;
  est.variables = unpack_z(z);
  est.objective_value = f;
  est.iterations = iterations;
  est.converged = converged;
  return est;
}

}  // namespace detail

/// Maximizes the calibration objective by damped Newton iteration on its
/// stationarity conditions. Runs cfg.restarts independent starts (the given
/// initial plus randomized ones) and returns the best objective. Relative
/// mode removes the similarity gauge by variable elimination.
inline GeometryEstimate solve(const GeometryVariables& initial,
                              const ObservationSet& obs, CalibrationMode mode,
                              const SolverConfig& cfg) {
  const int I = obs.num_acoustic;
  const int K = mode == CalibrationMode::Joint ? obs.num_visual : 0;
  const int T = obs.num_events;
  if (initial.num_sensors() != I || initial.num_events() != T)
    throw LengthMismatch("initial variables do not match observation set");
  if (mode == CalibrationMode::Joint && obs.num_visual < 1)
    throw Underdetermined("joint mode needs at least one visual anchor");
  if (T < minimal_event_count(I, K))
    throw Underdetermined("not enough events for the sensor count");
  if (!obs.all_columns_solvable(mode == CalibrationMode::Joint))
    throw Underdetermined("observation set has unsolvable event columns");

  Rng rng(cfg.seed);
  std::optional<GeometryEstimate> best;
  const int restarts = std::max(1, cfg.restarts);
  for (int attempt = 0; attempt < restarts; ++attempt) {
    GeometryVariables start =
        attempt == 0 ? initial : initialize(obs, mode, rng);
    try {
      GeometryEstimate est = detail::newton_ascent(start, obs, mode, cfg);
      if (!best || est.objective_value > best->objective_value)
        best = std::move(est);
    } catch (const CoincidentPoint&) {
      continue;  // degenerate start; try the next one
    }
  }
  if (!best) throw SingularHessian("all solver starts failed");
  return *best;
}

}  // namespace avcal
