#include "voxsr/geometry/preprocess.hpp"

#include <cmath>
#include <set>

#include "voxsr/common/error.hpp"
#include "voxsr/common/rng.hpp"

namespace voxsr::geometry {

namespace {

constexpr double kRadToDeg = 57.29577951308232;

PointCloud select_points(const PointCloud& cloud, const std::vector<std::size_t>& keep) {
  PointCloud out;
  out.points.reserve(keep.size());
  for (auto i : keep) out.points.push_back(cloud.points[i]);
  for (const auto& [name, values] : cloud.attrs) {
    auto& channel = out.attrs[name];
    channel.reserve(keep.size());
    for (auto i : keep) channel.push_back(values[i]);
  }
  return out;
}

}  // namespace

void FovSpec::check_valid() const {
  if (!(yaw_min_deg < yaw_max_deg)) fail_arg("fov: yaw_min must be < yaw_max");
  for (int a = 0; a < 3; ++a) {
    if (!(min_bound[a] < max_bound[a])) fail_arg("fov: min bound must be < max bound on axis ", a);
  }
}

FovSpec FovSpec::full() { return FovSpec{}; }

PointCloud crop_fov(const PointCloud& cloud, const FovSpec& fov) {
  fov.check_valid();
  std::vector<std::size_t> keep;
  keep.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    const double yaw = std::atan2(p.y(), p.x()) * kRadToDeg;
    if (yaw < fov.yaw_min_deg || yaw > fov.yaw_max_deg) continue;
    bool inside = true;
    for (int a = 0; a < 3; ++a) {
      if (p[a] < fov.min_bound[a] || p[a] > fov.max_bound[a]) {
        inside = false;
        break;
      }
    }
    if (inside) keep.push_back(i);
  }
  return select_points(cloud, keep);
}

PointCloud remove_ground(const PointCloud& cloud, double dist_thresh, int max_iters,
                         std::uint64_t seed) {
  if (cloud.empty()) return cloud;
  if (!(dist_thresh > 0)) fail_arg("remove_ground: dist_thresh must be > 0");
  const std::size_t n = cloud.size();
  if (n < 3) return cloud;

  // Near-horizontal constraint: plane normal within 30 degrees of the z axis.
  const double min_nz = std::cos(30.0 * M_PI / 180.0);

  Rng rng(seed, "ransac-ground");
  Vec3 best_normal = Vec3::Zero();
  double best_offset = 0.0;
  std::size_t best_inliers = 0;

  for (int iter = 0; iter < max_iters; ++iter) {
    const auto i0 = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n - 1)));
    const auto i1 = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n - 1)));
    const auto i2 = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n - 1)));
    if (i0 == i1 || i1 == i2 || i0 == i2) continue;

    const Vec3& a = cloud.points[i0];
    Vec3 normal = (cloud.points[i1] - a).cross(cloud.points[i2] - a);
    const double norm = normal.norm();
    if (norm < 1e-12) continue;
    normal /= norm;
    if (normal.z() < 0) normal = -normal;
    if (normal.z() < min_nz) continue;

    const double offset = -normal.dot(a);
    std::size_t inliers = 0;
    for (const auto& p : cloud.points) {
      if (std::abs(normal.dot(p) + offset) <= dist_thresh) ++inliers;
    }
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best_normal = normal;
      best_offset = offset;
    }
  }

  if (best_inliers < (n + 4) / 5) return cloud;  // inlier ratio below 20%

  std::vector<std::size_t> keep;
  keep.reserve(n - best_inliers);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(best_normal.dot(cloud.points[i]) + best_offset) > dist_thresh) keep.push_back(i);
  }
  return select_points(cloud, keep);
}

PointCloud aggregate_frames(const std::vector<std::pair<PointCloud, RigidTransform>>& frames) {
  if (frames.empty()) fail_arg("aggregate_frames: no frames");

  std::set<std::string> shared;
  for (const auto& [name, _] : frames.front().first.attrs) shared.insert(name);
  for (const auto& [cloud, pose] : frames) {
    for (auto it = shared.begin(); it != shared.end();) {
      if (cloud.attrs.count(*it) == 0) {
        it = shared.erase(it);
      } else {
        ++it;
      }
    }
  }

  PointCloud out;
  for (const auto& [cloud, pose] : frames) {
    PointCloud moved = apply_transform(cloud, pose);
    out.points.insert(out.points.end(), moved.points.begin(), moved.points.end());
    for (const auto& name : shared) {
      const auto& src = moved.attrs.at(name);
      auto& dst = out.attrs[name];
      dst.insert(dst.end(), src.begin(), src.end());
    }
  }
  return out;
}

}  // namespace voxsr::geometry
