#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "voxsr/geometry/point_cloud.hpp"

namespace voxsr::voxel {

using geometry::PointCloud;
using geometry::Vec3;

/// Axis-aligned voxel grid: origin is the minimum corner, dims the voxel
/// counts (nx, ny, nz) and edge the per-axis voxel edge length in meters.
/// Voxel intervals are half-open: [min, max) per axis.
struct VoxelGridSpec {
  Vec3 origin = Vec3::Zero();
  std::array<int, 3> dims = {32, 32, 8};
  Vec3 edge = Vec3(0.125, 0.125, 0.125);

  // Model-facing validation: dims >= 1 and divisible by 4 (needed by the
  // quarter-scale decoder heads), edges > 0.
  void check_valid() const;
  // Relaxed validation used by internally coarsened grids.
  void check_basic() const;

  std::int64_t voxel_count() const {
    return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
  }

  // Dense layout is z-major planes of (nx, ny): linear = (iz*nx + ix)*ny + iy.
  std::int64_t linear_index(int ix, int iy, int iz) const {
    return (static_cast<std::int64_t>(iz) * dims[0] + ix) * dims[1] + iy;
  }
  std::array<int, 3> unravel(std::int64_t linear) const;

  Vec3 voxel_min(int ix, int iy, int iz) const {
    return origin + Vec3(ix * edge.x(), iy * edge.y(), iz * edge.z());
  }
  Vec3 voxel_center(int ix, int iy, int iz) const {
    return voxel_min(ix, iy, iz) + 0.5 * edge;
  }

  // Half the largest voxel edge; bounds the decoder offset magnitude.
  double max_half_edge() const { return 0.5 * edge.maxCoeff(); }

  // Grid with dims/factor voxels of edge*factor; spans the same region.
  VoxelGridSpec coarsened(int factor) const;

  bool operator==(const VoxelGridSpec& o) const {
    return origin == o.origin && dims == o.dims && edge == o.edge;
  }
};

struct VoxelStats {
  std::int64_t count = 0;
  Vec3 sum = Vec3::Zero();  // running position sum; mean() divides on demand

  Vec3 mean() const { return sum / static_cast<double>(count); }
};

/// Sparse per-voxel statistics, sorted by linear index.
struct VoxelizedCloud {
  VoxelGridSpec spec;
  std::vector<std::pair<std::int64_t, VoxelStats>> cells;
  std::int64_t dropped = 0;  // points outside the grid bounds

  std::int64_t occupied_count() const { return static_cast<std::int64_t>(cells.size()); }
  const VoxelStats* find(std::int64_t linear) const;
};

/// Assigns each in-bounds point to voxel floor((p - origin)/edge) and
/// accumulates count and position sums. Points on or past a max boundary are
/// dropped and counted in `dropped`.
VoxelizedCloud voxelize(const PointCloud& cloud, const VoxelGridSpec& spec);

/// Re-aggregates fine statistics onto spec.coarsened(factor). Exact: coarse
/// sums are sums of the contained fine sums.
VoxelizedCloud coarsen(const VoxelizedCloud& vc, int factor);

}  // namespace voxsr::voxel
