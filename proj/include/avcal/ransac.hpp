#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "avcal/calibration.hpp"

namespace avcal {

// ---------------------------------------------------------------------------
// RANSAC around the geometry calibration: fit on a minimal set of event
// columns, grow a candidate set by checking every observation against
// triangulated event hypotheses, refit on the candidates, and feed the
// refit consensus back into the fitting step until it stops improving.
// ---------------------------------------------------------------------------

struct ObsKey {
  Modality modality = Modality::Acoustic;
  int sensor = 0;
  int event = 0;  // original time index

  auto operator<=>(const ObsKey&) const = default;
};

struct ConsensusSet {
  std::vector<ObsKey> members;
  double error = 0.0;  // negated refit objective; lower is better

  int size() const { return static_cast<int>(members.size()); }
};

/// Larger consensus wins; the refit objective breaks ties.
inline bool consensus_better(const ConsensusSet& a, const ConsensusSet& b) {
  if (a.size() != b.size()) return a.size() > b.size();
  return a.error < b.error;
}

/// Uniformly samples minimal_event_count(I, K) event columns (with all of
/// their observations) from the solvable columns of `obs`.
inline ObservationSet sample_minimal(const ObservationSet& obs,
                                     CalibrationMode mode, Rng& rng) {
  const int K = mode == CalibrationMode::Joint ? obs.num_visual : 0;
  const int need = minimal_event_count(obs.num_acoustic, K);

  std::vector<int> solvable;
  for (int t = 0; t < obs.num_events; ++t)
    if (obs.column_solvable(t, mode == CalibrationMode::Joint))
      solvable.push_back(t);
  if (static_cast<int>(solvable.size()) < need)
    throw Underdetermined("not enough solvable event columns to sample");

  // Partial Fisher-Yates for the first `need` columns.
  for (int i = 0; i < need; ++i) {
    std::uniform_int_distribution<int> pick(
        i, static_cast<int>(solvable.size()) - 1);
    std::swap(solvable[i], solvable[pick(rng)]);
  }
  std::vector<int> cols(solvable.begin(), solvable.begin() + need);
  std::sort(cols.begin(), cols.end());
  return obs.select_columns(cols);
}

namespace detail {

struct CandidateBuild {
  ConsensusSet consensus;
  // Triangulated event hypotheses for columns that produced one, keyed by
  // column position in `obs`; used to warm-start refits.
  std::vector<std::optional<Position2D>> event_hypotheses;
};

}  // namespace detail

/// RANSAC step 3: triangulate every event from all DoA axes (estimated
/// acoustic poses plus known visual poses), then admit each observation
/// whose mean intersection distance to the hypothesis is below `threshold`.
inline detail::CandidateBuild build_candidate_set_detail(
    const GeometryEstimate& est, const ObservationSet& obs,
    CalibrationMode mode, double threshold) {
  const bool joint = mode == CalibrationMode::Joint;
  detail::CandidateBuild out;
  out.event_hypotheses.assign(obs.num_events, std::nullopt);

  for (int t = 0; t < obs.num_events; ++t) {
    std::vector<SensorPose> poses;
    std::vector<Angle> bearings;
    std::vector<ObsKey> keys;
    for (int i = 0; i < obs.num_acoustic; ++i) {
      const auto& o = obs.acoustic_at(i, t);
      if (!o.observed()) continue;
      SensorPose pose{est.variables.sensor_positions[i],
                      est.variables.sensor_orientations[i],
                      Modality::Acoustic};
      poses.push_back(pose);
      bearings.push_back(global_bearing(pose, *o.angle));
      keys.push_back({Modality::Acoustic, i, obs.time_indices[t]});
    }
    if (joint) {
      for (int k = 0; k < obs.num_visual; ++k) {
        const auto& o = obs.visual_at(k, t);
        if (!o.observed()) continue;
        poses.push_back(obs.visual_poses[k]);
        bearings.push_back(global_bearing(obs.visual_poses[k], *o.angle));
        keys.push_back({Modality::Visual, k, obs.time_indices[t]});
      }
    }
    if (poses.size() < 2) continue;
    try {
      const EventLocalization loc = localize_event(poses, bearings);
      const auto consistency =
          per_sensor_consistency(poses, bearings, loc.position);
      out.event_hypotheses[t] = loc.position;
      for (std::size_t s = 0; s < keys.size(); ++s)
        if (consistency[s] < threshold)
          out.consensus.members.push_back(keys[s]);
    } catch (const Underdetermined&) {
      // Event skipped: its observations cannot join the candidate set.
    }
  }
  return out;
}

inline ConsensusSet build_candidate_set(const GeometryEstimate& est,
                                        const ObservationSet& obs,
                                        double threshold,
                                        CalibrationMode mode =
                                            CalibrationMode::Joint) {
  return build_candidate_set_detail(est, obs, mode, threshold).consensus;
}

struct RansacOutcome {
  GeometryEstimate estimate;
  ConsensusSet consensus;
  /// Original time indices of the events in estimate.variables.events.
  std::vector<int> event_time_indices;
  int iterations_used = 0;
};

namespace detail {

/// Masks `obs` down to the consensus members and drops columns that lose
/// solvability; also returns the kept original time indices.
inline ObservationSet mask_to_consensus(const ObservationSet& obs,
                                        const ConsensusSet& consensus,
                                        CalibrationMode mode) {
  ObservationSet masked = obs;
  std::vector<char> keep_a(obs.acoustic.size(), 0);
  std::vector<char> keep_v(obs.visual.size(), 0);
  // time index -> column position
  std::vector<int> col_of_time;
  for (int t = 0; t < obs.num_events; ++t) {
    const int ti = obs.time_indices[t];
    if (ti >= static_cast<int>(col_of_time.size()))
      col_of_time.resize(ti + 1, -1);
    col_of_time[ti] = t;
  }
  for (const auto& key : consensus.members) {
    if (key.event >= static_cast<int>(col_of_time.size())) continue;
    const int t = col_of_time[key.event];
    if (t < 0) continue;
    if (key.modality == Modality::Acoustic)
      keep_a[static_cast<std::size_t>(key.sensor) * obs.num_events + t] = 1;
    else
      keep_v[static_cast<std::size_t>(key.sensor) * obs.num_events + t] = 1;
  }
  for (std::size_t idx = 0; idx < masked.acoustic.size(); ++idx) {
    if (!keep_a[idx]) {
      masked.acoustic[idx].status = DetectionStatus::NoDetection;
      masked.acoustic[idx].angle.reset();
    }
  }
  for (std::size_t idx = 0; idx < masked.visual.size(); ++idx) {
    if (!keep_v[idx]) {
      masked.visual[idx].status = DetectionStatus::NoDetection;
      masked.visual[idx].angle.reset();
    }
  }
  return masked.retain_solvable_columns(mode == CalibrationMode::Joint);
}

/// Initial variables for a consensus refit: warm-start sensors from the
/// accepted estimate and events from the step-3 hypotheses where available.
inline GeometryVariables warm_start(const GeometryEstimate& est,
                                    const ObservationSet& full_obs,
                                    const CandidateBuild& build,
                                    const ObservationSet& masked) {
  GeometryVariables vars;
  vars.sensor_positions = est.variables.sensor_positions;
  vars.sensor_orientations = est.variables.sensor_orientations;
  vars.events.resize(masked.num_events);
  // original time index -> column in full_obs
  std::vector<int> col_of_time;
  for (int t = 0; t < full_obs.num_events; ++t) {
    const int ti = full_obs.time_indices[t];
    if (ti >= static_cast<int>(col_of_time.size()))
      col_of_time.resize(ti + 1, -1);
    col_of_time[ti] = t;
  }
  for (int c = 0; c < masked.num_events; ++c) {
    const int ti = masked.time_indices[c];
    const int t = ti < static_cast<int>(col_of_time.size()) ? col_of_time[ti]
                                                            : -1;
    if (t >= 0 && build.event_hypotheses[t]) {
      vars.events[c] = *build.event_hypotheses[t];
    } else {
      // Fall back to the sensor centroid; refit will move it.
      Vec2 acc{0.0, 0.0};
      for (const auto& p : vars.sensor_positions) acc += p;
      vars.events[c] = acc / std::max(1, vars.num_sensors());
    }
  }
  return vars;
}

}  // namespace detail

/// Full RANSAC calibration: sample minimal event sets, solve, build the
/// candidate set by intersection consistency, refit on candidates, and (by
/// default) feed each refit's consensus back into the fit until it stops
/// improving. Returns the best consensus estimate.
inline RansacOutcome calibrate_ransac(const ObservationSet& obs,
                                      const RansacConfig& cfg,
                                      const SolverConfig& solver_cfg,
                                      CalibrationMode mode =
                                          CalibrationMode::Joint) {
  const bool joint = mode == CalibrationMode::Joint;
  const int total_obs = obs.observed_count(joint);
  const int min_consensus = std::max(
      1, static_cast<int>(std::ceil(cfg.min_consensus_fraction * total_obs)));

  Rng rng(cfg.seed);
  std::optional<RansacOutcome> best;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    GeometryEstimate est;
    try {
      const ObservationSet minimal = sample_minimal(obs, mode, rng);
      SolverConfig scfg = solver_cfg;
      scfg.seed = mix_seed(cfg.seed, 0x5eed, iter);
      Rng init_rng(mix_seed(cfg.seed, 0x1717, iter));
      const GeometryVariables init = initialize(minimal, mode, init_rng);
      est = solve(init, minimal, mode, scfg);
    } catch (const Underdetermined&) {
      continue;
    } catch (const SingularHessian&) {
      continue;
    }

    // Steps 3-4 with feedback: rebuild the candidate set from each refit
    // until the consensus stops growing/improving.
    RansacOutcome candidate;
    bool have_candidate = false;
    for (int round = 0; round < (cfg.refit_feedback ? 8 : 1); ++round) {
      try {
        const auto build = build_candidate_set_detail(est, obs, mode,
                                                      cfg.inlier_threshold);
        if (build.consensus.size() < min_consensus) break;
        const ObservationSet masked =
            detail::mask_to_consensus(obs, build.consensus, mode);
        const int K = joint ? obs.num_visual : 0;
        if (masked.num_events < minimal_event_count(obs.num_acoustic, K))
          break;
        SolverConfig refit_cfg = solver_cfg;
        refit_cfg.seed = mix_seed(cfg.seed, 0xf1f1, iter * 16 + round);
        refit_cfg.restarts = 1;  // warm start only
        const GeometryVariables ws =
            detail::warm_start(est, obs, build, masked);
        GeometryEstimate refit = solve(ws, masked, mode, refit_cfg);
        ConsensusSet cons = build.consensus;
        cons.error = -refit.objective_value;
        if (have_candidate && !consensus_better(cons, candidate.consensus))
          break;
        candidate.estimate = refit;
        candidate.consensus = std::move(cons);
        candidate.event_time_indices = masked.time_indices;
        candidate.iterations_used = iter + 1;
        have_candidate = true;
        est = std::move(refit);
      } catch (const Underdetermined&) {
        break;
      } catch (const SingularHessian&) {
        break;
      }
    }
    if (!have_candidate) continue;

    if (!best || consensus_better(candidate.consensus, best->consensus))
      best = std::move(candidate);

    // A consensus containing every observation cannot be improved.
    if (best && best->consensus.size() == total_obs) break;
  }

  if (!best) throw NoConsensus("no consensus reached within iteration budget");
  return *best;
}

}  // namespace avcal
