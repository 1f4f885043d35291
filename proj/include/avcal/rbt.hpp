#pragma once

#include <algorithm>
#include <array>
#include <complex>
#include <limits>
#include <vector>

#include "avcal/geometry.hpp"

namespace avcal {

// ---------------------------------------------------------------------------
// Similarity transform (scale, rotation, translation) between the acoustic
// and the visual coordinate frame, estimated from paired event trajectories.
// The least-squares fit runs on a complex representation of the 2D points
// and is decoupled in the DFT domain: all bins but the first determine the
// complex gain (scale and rotation); the first bin determines the offset.
// ---------------------------------------------------------------------------

struct RbtParams {
  double scale = 1.0;
  Angle rotation;
  Vec2 translation;

  /// Column-vector convention: p' = scale * R * p + translation.
  std::array<double, 4> rotation_matrix() const {
    const double c = std::cos(rotation.radians());
    const double s = std::sin(rotation.radians());
    return {c, -s, s, c};  // row-major [r00 r01 r10 r11]
  }
};

inline Position2D apply_rbt(const RbtParams& params, const Position2D& p) {
  const auto r = params.rotation_matrix();
  return {params.scale * (r[0] * p.x + r[1] * p.y) + params.translation.x,
          params.scale * (r[2] * p.x + r[3] * p.y) + params.translation.y};
}

inline RbtParams invert_rbt(const RbtParams& params) {
  RbtParams inv;
  inv.scale = 1.0 / params.scale;
  inv.rotation = -params.rotation;
  const Vec2 t = apply_rbt({inv.scale, inv.rotation, {0.0, 0.0}},
                           params.translation);
  inv.translation = {-t.x, -t.y};
  return inv;
}

struct PairedTrajectory {
  std::vector<Position2D> source;  // acoustic-frame event positions
  std::vector<Position2D> target;  // visual-frame event positions

  int size() const { return static_cast<int>(source.size()); }

  void validate() const {
    if (source.size() != target.size())
      throw LengthMismatch("paired trajectory length mismatch");
    if (source.size() < 2)
      throw Underdetermined("need at least 2 point pairs");
  }
};

using Complex = std::complex<double>;

inline Complex to_complex(const Vec2& v) { return {v.x, v.y}; }

/// Unnormalized forward DFT, X[n] = sum_t x[t] exp(-j 2 pi n t / T).
/// Direct evaluation; trajectory lengths here never warrant an FFT.
inline std::vector<Complex> dft_forward(const std::vector<Complex>& seq) {
  const std::size_t T = seq.size();
  std::vector<Complex> out(T, Complex{0.0, 0.0});
  for (std::size_t n = 0; n < T; ++n) {
    Complex acc{0.0, 0.0};
    for (std::size_t t = 0; t < T; ++t) {
      const double phase = -kTwoPi * static_cast<double>(n) *
                           static_cast<double>(t) / static_cast<double>(T);
      acc += seq[t] * std::polar(1.0, phase);
    }
    out[n] = acc;
  }
  return out;
}

struct AlphaBeta {
  Complex alpha;  // complex gain: |alpha| = scale, arg(alpha) = rotation
  Complex beta;   // offset in DFT bin-0 scale (T times the translation)
};

/// Least-squares gain and offset of target = alpha * source + beta/T,
/// computed on the DFT bins: alpha from bins 1..T-1, beta from bin 0.
inline AlphaBeta solve_alpha_beta(const PairedTrajectory& pt) {
  pt.validate();
  const int T = pt.size();

  std::vector<Complex> u(T), v(T);
  for (int t = 0; t < T; ++t) {
    u[t] = to_complex(pt.source[t]);
    v[t] = to_complex(pt.target[t]);
  }
  const auto x = dft_forward(u);
  const auto y = dft_forward(v);

  Complex num{0.0, 0.0};
  double den = 0.0;
  for (int n = 1; n < T; ++n) {
    num += std::conj(x[n]) * y[n];
    den += std::norm(x[n]);
  }

  // Degenerate source: all points coincide, so every bin but the first is
  // (up to roundoff) zero and the gain is unobservable.
  double scale_sq = 0.0;
  for (const auto& c : u) scale_sq = std::max(scale_sq, std::norm(c));
  if (den <= 1e-24 * static_cast<double>(T) * std::max(1.0, scale_sq))
    throw DegenerateSource("source trajectory points all coincide");

  AlphaBeta ab;
  ab.alpha = num / den;
  ab.beta = y[0] - ab.alpha * x[0];
  return ab;
}

/// Recovers scale, rotation and translation from the complex gain/offset.
/// With the unnormalized DFT the offset lives in bin-0 scale, hence the 1/T.
inline RbtParams extract_params(Complex alpha, Complex beta, int T) {
  const double s = std::abs(alpha);
  if (s <= 0.0) throw ZeroAlpha("zero complex gain");
  RbtParams params;
  params.scale = s;
  params.rotation = Angle(std::arg(alpha));
  params.translation = {beta.real() / T, beta.imag() / T};
  return params;
}

inline RbtParams estimate_rbt(const PairedTrajectory& pt) {
  const AlphaBeta ab = solve_alpha_beta(pt);
  return extract_params(ab.alpha, ab.beta, pt.size());
}

// ---------------------------------------------------------------------------
// RANSAC over point pairs
// ---------------------------------------------------------------------------

struct RbtRansacResult {
  RbtParams params;
  std::vector<int> inliers;  // indices into the paired trajectory
};

/// RANSAC fit of the similarity transform: minimal sample of two pairs,
/// inlier test on mapped-source-to-target distance, refit on the consensus.
inline RbtRansacResult estimate_rbt_ransac(const PairedTrajectory& pt,
                                           const RansacConfig& cfg) {
  pt.validate();
  const int T = pt.size();

  std::vector<Complex> u(T), v(T);
  for (int t = 0; t < T; ++t) {
    u[t] = to_complex(pt.source[t]);
    v[t] = to_complex(pt.target[t]);
  }

  const int min_consensus =
      std::max(2, static_cast<int>(std::ceil(cfg.min_consensus_fraction * T)));

  Rng rng(cfg.seed);
  std::uniform_int_distribution<int> pick(0, T - 1);

  std::vector<int> best_inliers;
  double best_residual = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const int a = pick(rng);
    int b = pick(rng);
    if (b == a) b = (b + 1) % T;
    if (std::abs(u[a] - u[b]) < 1e-12) continue;  // degenerate sample

    // Exact two-pair fit in the time domain.
    const Complex alpha = (v[a] - v[b]) / (u[a] - u[b]);
    const Complex offset = v[a] - alpha * u[a];
    if (std::abs(alpha) <= 0.0) continue;

    std::vector<int> inliers;
    double residual = 0.0;
    for (int t = 0; t < T; ++t) {
      const double err = std::abs(alpha * u[t] + offset - v[t]);
      if (err < cfg.inlier_threshold) {
        inliers.push_back(t);
        residual += err * err;
      }
    }
    if (static_cast<int>(inliers.size()) < min_consensus) continue;

    if (inliers.size() > best_inliers.size() ||
        (inliers.size() == best_inliers.size() && residual < best_residual)) {
      best_inliers = std::move(inliers);
      best_residual = residual;
    }
  }

  if (static_cast<int>(best_inliers.size()) < min_consensus)
    throw NoConsensus("no consensus set for the coordinate mapping");

  PairedTrajectory consensus;
  for (int t : best_inliers) {
    consensus.source.push_back(pt.source[t]);
    consensus.target.push_back(pt.target[t]);
  }
  return {estimate_rbt(consensus), best_inliers};
}

}  // namespace avcal
