#include "voxsr/voxel/grid.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "voxsr/common/error.hpp"

namespace voxsr::voxel {

void VoxelGridSpec::check_basic() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) fail_arg("voxel grid: dims must be >= 1, got ", dims[a], " on axis ", a);
    if (!(edge[a] > 0)) fail_arg("voxel grid: edge must be > 0 on axis ", a);
  }
  if (!origin.allFinite()) fail_arg("voxel grid: non-finite origin");
}

void VoxelGridSpec::check_valid() const {
  check_basic();
  for (int a = 0; a < 3; ++a) {
    if (dims[a] % 4 != 0) {
      fail_arg("voxel grid: dims must be divisible by 4 for the multi-scale heads, got ", dims[a],
               " on axis ", a);
    }
  }
}

std::array<int, 3> VoxelGridSpec::unravel(std::int64_t linear) const {
  const int iy = static_cast<int>(linear % dims[1]);
  linear /= dims[1];
  const int ix = static_cast<int>(linear % dims[0]);
  const int iz = static_cast<int>(linear / dims[0]);
  return {ix, iy, iz};
}

VoxelGridSpec VoxelGridSpec::coarsened(int factor) const {
  VoxelGridSpec out;
  out.origin = origin;
  for (int a = 0; a < 3; ++a) {
    if (dims[a] % factor != 0) {
      fail_arg("voxel grid: dims ", dims[a], " not divisible by coarsening factor ", factor);
    }
    out.dims[a] = dims[a] / factor;
    out.edge[a] = edge[a] * factor;
  }
  return out;
}

const VoxelStats* VoxelizedCloud::find(std::int64_t linear) const {
  auto it = std::lower_bound(cells.begin(), cells.end(), linear,
                             [](const auto& cell, std::int64_t key) { return cell.first < key; });
  if (it == cells.end() || it->first != linear) return nullptr;
  return &it->second;
}

VoxelizedCloud voxelize(const PointCloud& cloud, const VoxelGridSpec& spec) {
  spec.check_basic();
  VoxelizedCloud out;
  out.spec = spec;

  std::unordered_map<std::int64_t, VoxelStats> acc;
  acc.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    int idx[3];
    bool inside = true;
    for (int a = 0; a < 3; ++a) {
      const double q = std::floor((p[a] - spec.origin[a]) / spec.edge[a]);
      if (q < 0 || q >= spec.dims[a]) {
        inside = false;
        break;
      }
      idx[a] = static_cast<int>(q);
    }
    if (!inside) {
      ++out.dropped;
      continue;
    }
    auto& stats = acc[spec.linear_index(idx[0], idx[1], idx[2])];
    ++stats.count;
    stats.sum += p;
  }

  out.cells.assign(acc.begin(), acc.end());
  std::sort(out.cells.begin(), out.cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

VoxelizedCloud coarsen(const VoxelizedCloud& vc, int factor) {
  VoxelizedCloud out;
  out.spec = vc.spec.coarsened(factor);
  out.dropped = vc.dropped;

  std::unordered_map<std::int64_t, VoxelStats> acc;
  acc.reserve(vc.cells.size());
  for (const auto& [linear, stats] : vc.cells) {
    const auto [ix, iy, iz] = vc.spec.unravel(linear);
    auto& coarse = acc[out.spec.linear_index(ix / factor, iy / factor, iz / factor)];
    coarse.count += stats.count;
    coarse.sum += stats.sum;
  }

  out.cells.assign(acc.begin(), acc.end());
  std::sort(out.cells.begin(), out.cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace voxsr::voxel
