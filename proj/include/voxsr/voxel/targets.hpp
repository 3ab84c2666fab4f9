#pragma once

#include <span>
#include <string>

#include "voxsr/voxel/grid.hpp"

namespace voxsr::voxel {

/// Supervision (or prediction) for one scale: an occupancy mask over the
/// grid and a 3-channel offset field, meters, relative to voxel centers.
/// Layouts: mask is (nz, nx, ny); offset is (3, nz, nx, ny) channel-first.
/// Offsets are zero wherever mask = 0.
struct ScaleTargets {
  VoxelGridSpec spec;
  std::vector<double> mask;
  std::vector<double> offset;
  std::int64_t occupied = 0;
};

/// Masks and offsets at scales 1/4, 1/2 and 1 of the input grid.
struct ReconTargets {
  ScaleTargets quarter, half, full;

  const ScaleTargets& at(int i) const { return i == 0 ? quarter : (i == 1 ? half : full); }
};

/// Scale-1 mask marks occupied voxels; offsets point from each voxel center
/// to the mean of the points inside. Coarser scales re-aggregate the same
/// statistics on coarsened grids, so their means are exact too.
ReconTargets derive_targets(const VoxelizedCloud& vc);

/// Emits one point per voxel with mask_prob >= threshold at
/// center + offset, with the offset clamped per axis to half the voxel edge
/// so every point stays inside its voxel. Shapes must match spec.dims.
PointCloud reconstruct(std::span<const double> mask_prob, std::span<const double> offset,
                       const VoxelGridSpec& spec, double threshold);

/// Per-voxel means of a voxelized cloud as a point cloud (the reconstruction
/// target of the round-trip identity), ordered by linear index.
PointCloud voxel_means(const VoxelizedCloud& vc);

/// Intersection-over-union of two masks thresholded at 0.5; 1.0 when both
/// are empty. Throws on shape mismatch.
double voxel_iou(std::span<const double> mask_a, std::span<const double> mask_b);

/// Debug dump of a dense grid array (mask or offset field) as a flat binary
/// file with a small self-describing header.
void save_grid_array(const std::string& path, const VoxelGridSpec& spec, int channels,
                     std::span<const double> data);
struct GridArray {
  VoxelGridSpec spec;
  int channels = 1;
  std::vector<double> data;
};
GridArray load_grid_array(const std::string& path);

}  // namespace voxsr::voxel
