#pragma once

#include <optional>
#include <vector>

#include "voxsr/geometry/point_cloud.hpp"

namespace voxsr::registration {

struct RegThresholds {
  double re_deg = 5.0;
  double te_m = 0.5;
};

struct RegResult {
  geometry::RigidTransform estimate;
  double re_deg = 0.0;  // rotation error, degrees, in [0, 180]
  double te_m = 0.0;    // translation error, meters
  bool success = false;
  int iterations = 0;
  double final_residual = 0.0;
};

/// Rotation error acos((Tr(Re^T Rg) - 1)/2) with the argument clamped to
/// [-1, 1], translation error ||te - tg||, success per the thresholds
/// (strict inequalities).
RegResult evaluate_registration(const geometry::RigidTransform& estimate,
                                const geometry::RigidTransform& ground_truth,
                                const RegThresholds& thresholds = {});

struct RecallSummary {
  double recall_pct = 0.0;
  std::size_t successes = 0;
  std::size_t total = 0;
  // Means over successful pairs only; absent when nothing succeeded.
  std::optional<double> re_succ, te_succ;
  // Means over all pairs.
  double re_all = 0.0, te_all = 0.0;
};

/// The [succ./all] summary convention: recall percentage plus RE/TE means
/// over successes and over everything. Throws on an empty list.
RecallSummary registration_recall(const std::vector<RegResult>& results);

}  // namespace voxsr::registration
