#include "voxsr/voxel/targets.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "voxsr/common/error.hpp"

namespace voxsr::voxel {

namespace {

ScaleTargets targets_for(const VoxelizedCloud& vc) {
  ScaleTargets out;
  out.spec = vc.spec;
  const auto n = static_cast<std::size_t>(vc.spec.voxel_count());
  out.mask.assign(n, 0.0);
  out.offset.assign(3 * n, 0.0);
  out.occupied = vc.occupied_count();
  for (const auto& [linear, stats] : vc.cells) {
    const auto [ix, iy, iz] = vc.spec.unravel(linear);
    out.mask[static_cast<std::size_t>(linear)] = 1.0;
    const Vec3 off = stats.mean() - vc.spec.voxel_center(ix, iy, iz);
    for (int a = 0; a < 3; ++a) {
      out.offset[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(linear)] = off[a];
    }
  }
  return out;
}

void write_raw(std::ofstream& os, const void* data, std::size_t bytes) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

}  // namespace

ReconTargets derive_targets(const VoxelizedCloud& vc) {
  ReconTargets out;
  out.full = targets_for(vc);
  out.half = targets_for(coarsen(vc, 2));
  out.quarter = targets_for(coarsen(vc, 4));
  return out;
}

PointCloud reconstruct(std::span<const double> mask_prob, std::span<const double> offset,
                       const VoxelGridSpec& spec, double threshold) {
  spec.check_basic();
  const auto n = static_cast<std::size_t>(spec.voxel_count());
  if (mask_prob.size() != n) {
    fail_arg("reconstruct: mask shape mismatch, expected ", n, " voxels (", spec.dims[0], "x",
             spec.dims[1], "x", spec.dims[2], "), received ", mask_prob.size());
  }
  if (offset.size() != 3 * n) {
    fail_arg("reconstruct: offset shape mismatch, expected 3x", n, " values, received ",
             offset.size());
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    fail_arg("reconstruct: threshold must lie in (0,1), got ", threshold);
  }

  PointCloud cloud;
  for (std::size_t linear = 0; linear < n; ++linear) {
    if (mask_prob[linear] < threshold) continue;
    const auto [ix, iy, iz] = spec.unravel(static_cast<std::int64_t>(linear));
    Vec3 off(offset[linear], offset[n + linear], offset[2 * n + linear]);
    for (int a = 0; a < 3; ++a) {
      const double half = 0.5 * spec.edge[a];
      off[a] = std::clamp(off[a], -half, half);
    }
    cloud.points.push_back(spec.voxel_center(ix, iy, iz) + off);
  }
  return cloud;
}

PointCloud voxel_means(const VoxelizedCloud& vc) {
  PointCloud cloud;
  cloud.points.reserve(vc.cells.size());
  for (const auto& [linear, stats] : vc.cells) cloud.points.push_back(stats.mean());
  return cloud;
}

double voxel_iou(std::span<const double> mask_a, std::span<const double> mask_b) {
  if (mask_a.size() != mask_b.size()) {
    fail_arg("voxel_iou: shape mismatch, ", mask_a.size(), " vs ", mask_b.size());
  }
  std::int64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < mask_a.size(); ++i) {
    const bool a = mask_a[i] >= 0.5;
    const bool b = mask_b[i] >= 0.5;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {
constexpr char kGridMagic[8] = {'V', 'S', 'R', 'G', 'R', 'I', 'D', '1'};
}

void save_grid_array(const std::string& path, const VoxelGridSpec& spec, int channels,
                     std::span<const double> data) {
  const auto n = static_cast<std::size_t>(spec.voxel_count());
  if (data.size() != n * static_cast<std::size_t>(channels)) {
    fail_arg("save_grid_array: expected ", n * channels, " values, got ", data.size());
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail("cannot open '", path, "' for writing");
  write_raw(os, kGridMagic, 8);
  const std::int32_t dims[4] = {spec.dims[0], spec.dims[1], spec.dims[2], channels};
  write_raw(os, dims, sizeof(dims));
  double geo[6] = {spec.origin.x(), spec.origin.y(), spec.origin.z(),
                   spec.edge.x(),   spec.edge.y(),   spec.edge.z()};
  write_raw(os, geo, sizeof(geo));
  const char dtype[4] = {'f', '6', '4', ' '};
  write_raw(os, dtype, 4);
  write_raw(os, data.data(), data.size() * sizeof(double));
  if (!os) fail("write failed for '", path, "'");
}

GridArray load_grid_array(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open '", path, "' for reading");
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kGridMagic, 8) != 0) fail("'", path, "': not a grid array file");
  std::int32_t dims[4];
  is.read(reinterpret_cast<char*>(dims), sizeof(dims));
  double geo[6];
  is.read(reinterpret_cast<char*>(geo), sizeof(geo));
  char dtype[4];
  is.read(dtype, 4);
  if (!is || std::memcmp(dtype, "f64 ", 4) != 0) fail("'", path, "': unsupported dtype");

  GridArray out;
  out.spec.dims = {dims[0], dims[1], dims[2]};
  out.channels = dims[3];
  out.spec.origin = Vec3(geo[0], geo[1], geo[2]);
  out.spec.edge = Vec3(geo[3], geo[4], geo[5]);
  out.spec.check_basic();
  const auto n = static_cast<std::size_t>(out.spec.voxel_count()) *
                 static_cast<std::size_t>(out.channels);
  out.data.resize(n);
  is.read(reinterpret_cast<char*>(out.data.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) fail("'", path, "': truncated grid array payload");
  return out;
}

}  // namespace voxsr::voxel
