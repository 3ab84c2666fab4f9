#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "voxsr/geometry/point_cloud.hpp"

namespace voxsr::geometry {

/// Horizontal field-of-view sector plus axis-aligned coordinate bounds.
/// Yaw is atan2(y, x) measured counterclockwise from +x, in degrees.
struct FovSpec {
  double yaw_min_deg = -180.0;
  double yaw_max_deg = 180.0;
  Vec3 min_bound{-1e30, -1e30, -1e30};
  Vec3 max_bound{1e30, 1e30, 1e30};

  void check_valid() const;

  static FovSpec full();
};

/// Keeps points with yaw in [yaw_min, yaw_max] and coordinates inside the
/// bounds (closed intervals). Order preserved; idempotent.
PointCloud crop_fov(const PointCloud& cloud, const FovSpec& fov);

/// RANSAC plane removal standing in for a full ground-segmentation stack.
/// Fits the best near-horizontal plane (normal within 30 degrees of +z) and
/// drops points within dist_thresh of it. If no candidate plane reaches a 20%
/// inlier ratio the input is returned unchanged.
PointCloud remove_ground(const PointCloud& cloud, double dist_thresh, int max_iters,
                         std::uint64_t seed);

/// Transforms every frame by its pose and concatenates in input order.
/// Attr channels present in all frames are concatenated; others are dropped.
/// Throws std::invalid_argument on an empty frame list.
PointCloud aggregate_frames(const std::vector<std::pair<PointCloud, RigidTransform>>& frames);

}  // namespace voxsr::geometry
