#pragma once

#include <vector>

#include "voxsr/geometry/point_cloud.hpp"

namespace voxsr::registration {

using geometry::PointCloud;
using geometry::RigidTransform;

struct IcpOptions {
  int max_iters = 50;
  double tol = 1e-8;           // parameter-change stopping threshold
  double max_corr_dist = 1.0;  // correspondence rejection radius, meters
};

struct IcpResult {
  RigidTransform transform;
  int iterations = 0;
  double final_residual = 0.0;              // mean correspondence distance
  std::vector<double> residual_history;     // per-iteration means
};

/// Point-to-point ICP: nearest-neighbor correspondences (pairs beyond
/// max_corr_dist rejected) and the closed-form cross-covariance SVD
/// alignment with reflection correction each iteration. Throws on
/// degenerate geometry (fewer than 3 correspondences or a rank-deficient
/// correspondence set).
IcpResult icp(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
              const IcpOptions& opts = {});

/// One closed-form alignment of explicitly paired points (the inner solver
/// of the ICP loop).
RigidTransform align_pairs(const std::vector<geometry::Vec3>& source,
                           const std::vector<geometry::Vec3>& target);

}  // namespace voxsr::registration
