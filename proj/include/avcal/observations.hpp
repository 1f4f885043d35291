#pragma once

#include <vector>

#include "avcal/geometry.hpp"

namespace avcal {

/// Masked DoA tables over (sensor x event). Acoustic sensors are unknowns;
/// visual sensors come with known poses and act as anchors. Entries whose
/// status carries no angle are masked and contribute nothing anywhere.
struct ObservationSet {
  int num_acoustic = 0;  // I
  int num_visual = 0;    // K
  int num_events = 0;    // T (columns)

  std::vector<DoaObservation> acoustic;  // I x T, row-major
  std::vector<DoaObservation> visual;    // K x T, row-major
  std::vector<SensorPose> visual_poses;  // K

  /// Original time indices of the columns (identity for fresh sets; subsets
  /// keep the labels of the columns they retained).
  std::vector<int> time_indices;

  ObservationSet() = default;
  ObservationSet(int I, int K, int T)
      : num_acoustic(I), num_visual(K), num_events(T) {
    DoaObservation blank;
    blank.status = DetectionStatus::NoDetection;
    acoustic.assign(static_cast<std::size_t>(I) * T, blank);
    visual.assign(static_cast<std::size_t>(K) * T, blank);
    for (int i = 0; i < I; ++i)
      for (int t = 0; t < T; ++t) {
        auto& o = acoustic_at(i, t);
        o.sensor_index = i;
        o.time_index = t;
        o.modality = Modality::Acoustic;
      }
    for (int k = 0; k < K; ++k)
      for (int t = 0; t < T; ++t) {
        auto& o = visual_at(k, t);
        o.sensor_index = k;
        o.time_index = t;
        o.modality = Modality::Visual;
      }
    time_indices.resize(T);
    for (int t = 0; t < T; ++t) time_indices[t] = t;
  }

  DoaObservation& acoustic_at(int i, int t) {
    return acoustic[static_cast<std::size_t>(i) * num_events + t];
  }
  const DoaObservation& acoustic_at(int i, int t) const {
    return acoustic[static_cast<std::size_t>(i) * num_events + t];
  }
  DoaObservation& visual_at(int k, int t) {
    return visual[static_cast<std::size_t>(k) * num_events + t];
  }
  const DoaObservation& visual_at(int k, int t) const {
    return visual[static_cast<std::size_t>(k) * num_events + t];
  }

  int acoustic_count_in_column(int t) const {
    int n = 0;
    for (int i = 0; i < num_acoustic; ++i)
      if (acoustic_at(i, t).observed()) ++n;
    return n;
  }
  int visual_count_in_column(int t) const {
    int n = 0;
    for (int k = 0; k < num_visual; ++k)
      if (visual_at(k, t).observed()) ++n;
    return n;
  }

  /// Total number of unmasked entries.
  int observed_count(bool include_visual = true) const {
    int n = 0;
    for (const auto& o : acoustic)
      if (o.observed()) ++n;
    if (include_visual)
      for (const auto& o : visual)
        if (o.observed()) ++n;
    return n;
  }

  /// A column is solvable when it has at least one acoustic and at least two
  /// total observations; other columns cannot pin down their event.
  bool column_solvable(int t, bool include_visual = true) const {
    const int a = acoustic_count_in_column(t);
    const int v = include_visual ? visual_count_in_column(t) : 0;
    return a >= 1 && a + v >= 2;
  }

  bool all_columns_solvable(bool include_visual = true) const {
    for (int t = 0; t < num_events; ++t)
      if (!column_solvable(t, include_visual)) return false;
    return true;
  }

  /// Subset keeping the given columns (in the given order).
  ObservationSet select_columns(const std::vector<int>& cols) const {
    ObservationSet out(num_acoustic, num_visual,
                       static_cast<int>(cols.size()));
    out.visual_poses = visual_poses;
    for (int c = 0; c < static_cast<int>(cols.size()); ++c) {
      const int t = cols[c];
      out.time_indices[c] = time_indices[t];
      for (int i = 0; i < num_acoustic; ++i) {
        out.acoustic_at(i, c) = acoustic_at(i, t);
        out.acoustic_at(i, c).time_index = c;
      }
      for (int k = 0; k < num_visual; ++k) {
        out.visual_at(k, c) = visual_at(k, t);
        out.visual_at(k, c).time_index = c;
      }
    }
    return out;
  }

  /// Drops columns that are not solvable; returns the filtered set.
  ObservationSet retain_solvable_columns(bool include_visual = true) const {
    std::vector<int> keep;
    for (int t = 0; t < num_events; ++t)
      if (column_solvable(t, include_visual)) keep.push_back(t);
    return select_columns(keep);
  }
};

}  // namespace avcal
