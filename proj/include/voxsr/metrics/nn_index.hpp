#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "voxsr/geometry/point_cloud.hpp"

namespace voxsr::metrics {

using geometry::Vec3;

/// Exact nearest-neighbor queries over a uniform cell grid. Ring search
/// terminates only once no unvisited cell can hold a closer point, so query
/// results equal a brute-force scan (identical distance arithmetic, same
/// squaredNorm expression).
class NnIndex {
 public:
  explicit NnIndex(const std::vector<Vec3>& points);

  struct Hit {
    std::int32_t index = -1;
    double dist_sq = 0.0;
  };
  Hit nearest(const Vec3& query) const;
  double nearest_sq(const Vec3& query) const { return nearest(query).dist_sq; }
  std::size_t size() const { return points_.size(); }

 private:
  std::size_t cell_of(const Vec3& p, std::array<int, 3>& idx) const;

  std::vector<Vec3> points_;
  Vec3 mins_ = Vec3::Zero();
  Vec3 cell_ = Vec3::Ones();
  std::array<int, 3> dims_ = {1, 1, 1};
  std::vector<std::int32_t> start_;  // CSR cell ranges over order_
  std::vector<std::int32_t> order_;
};

}  // namespace voxsr::metrics
