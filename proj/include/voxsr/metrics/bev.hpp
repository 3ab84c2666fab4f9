#pragma once

#include <vector>

#include "voxsr/geometry/point_cloud.hpp"

namespace voxsr::metrics {

/// 2D histogram grid over the (x, y) plane.
struct BevGridSpec {
  double min_x = -2.0;
  double min_y = -2.0;
  int nx = 8;
  int ny = 8;
  double cell = 0.5;

  void check_valid() const;
  std::size_t bins() const { return static_cast<std::size_t>(nx) * ny; }
};

/// Occupancy histogram normalized to a probability distribution over bins.
/// Points outside the grid are dropped; throws if nothing lands inside.
std::vector<double> bev_histogram(const geometry::PointCloud& cloud, const BevGridSpec& spec);

/// Jensen-Shannon divergence (base-2 logarithm, in [0, 1]) between the BEV
/// occupancy distributions of two clouds.
double jsd_bev(const geometry::PointCloud& a, const geometry::PointCloud& b,
               const BevGridSpec& spec);

/// Unbiased squared maximum mean discrepancy between two sets of clouds,
/// over BEV histogram vectors under a Gaussian kernel whose bandwidth is the
/// median pairwise histogram distance. The U-statistic can dip slightly
/// negative; the result is clamped at zero. Needs >= 2 clouds per set.
double mmd_bev(const std::vector<geometry::PointCloud>& set_a,
               const std::vector<geometry::PointCloud>& set_b, const BevGridSpec& spec);

}  // namespace voxsr::metrics
