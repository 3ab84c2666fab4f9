#include "voxsr/metrics/nn_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "voxsr/common/error.hpp"

namespace voxsr::metrics {

NnIndex::NnIndex(const std::vector<Vec3>& points) : points_(points) {
  if (points_.empty()) fail_arg("nn index: empty cloud");

  Vec3 maxs = points_[0];
  mins_ = points_[0];
  for (const auto& p : points_) {
    mins_ = mins_.cwiseMin(p);
    maxs = maxs.cwiseMax(p);
  }
  const int target = std::clamp(
      static_cast<int>(std::cbrt(static_cast<double>(points_.size()))) + 1, 1, 64);
  for (int a = 0; a < 3; ++a) {
    const double extent = maxs[a] - mins_[a];
    dims_[a] = extent > 0 ? target : 1;
    cell_[a] = std::max(extent / dims_[a], 1e-12);
  }

  const std::size_t n_cells =
      static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  std::vector<std::int32_t> counts(n_cells + 1, 0);
  std::vector<std::size_t> cell_ids(points_.size());
  std::array<int, 3> idx;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    cell_ids[i] = cell_of(points_[i], idx);
    ++counts[cell_ids[i] + 1];
  }
  for (std::size_t c = 1; c <= n_cells; ++c) counts[c] += counts[c - 1];
  start_ = counts;
  order_.resize(points_.size());
  std::vector<std::int32_t> cursor(counts.begin(), counts.end() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    order_[static_cast<std::size_t>(cursor[cell_ids[i]]++)] = static_cast<std::int32_t>(i);
  }
}

std::size_t NnIndex::cell_of(const Vec3& p, std::array<int, 3>& idx) const {
  for (int a = 0; a < 3; ++a) {
    idx[a] = std::clamp(static_cast<int>(std::floor((p[a] - mins_[a]) / cell_[a])), 0,
                        dims_[a] - 1);
  }
  return (static_cast<std::size_t>(idx[0]) * dims_[1] + idx[1]) * dims_[2] + idx[2];
}

NnIndex::Hit NnIndex::nearest(const Vec3& query) const {
  std::array<int, 3> home;
  cell_of(query, home);

  const int max_ring = dims_[0] + dims_[1] + dims_[2] + 2;
  double best = std::numeric_limits<double>::infinity();
  std::int32_t best_idx = -1;

  for (int ring = 0; ring <= max_ring; ++ring) {
    if (ring > 0 && std::isfinite(best)) {
      // Everything unvisited lies outside the box of cells within Chebyshev
      // radius ring-1; stop once the query is farther from the box boundary
      // than the current best. Faces flush with the grid have no cells
      // beyond them and do not constrain the margin.
      double margin = std::numeric_limits<double>::infinity();
      bool all_clipped = true;
      for (int a = 0; a < 3; ++a) {
        if (home[a] - (ring - 1) > 0) {
          all_clipped = false;
          margin = std::min(margin, query[a] - (mins_[a] + (home[a] - (ring - 1)) * cell_[a]));
        }
        if (home[a] + (ring - 1) < dims_[a] - 1) {
          all_clipped = false;
          margin = std::min(margin,
                            (mins_[a] + (home[a] + ring) * cell_[a]) - query[a]);
        }
      }
      if (all_clipped) break;  // the box already covers the whole grid
      if (margin > 0 && best <= margin * margin) break;
    }
    bool any_cell = false;
    for (int dx = -ring; dx <= ring; ++dx) {
      const int ix = home[0] + dx;
      if (ix < 0 || ix >= dims_[0]) continue;
      for (int dy = -ring; dy <= ring; ++dy) {
        const int iy = home[1] + dy;
        if (iy < 0 || iy >= dims_[1]) continue;
        const bool face_xy = std::abs(dx) == ring || std::abs(dy) == ring;
        for (int dz = -ring; dz <= ring; ++dz) {
          if (!face_xy && std::abs(dz) != ring) continue;  // shell only
          const int iz = home[2] + dz;
          if (iz < 0 || iz >= dims_[2]) continue;
          any_cell = true;
          const std::size_t cell =
              (static_cast<std::size_t>(ix) * dims_[1] + iy) * dims_[2] + iz;
          for (std::int32_t k = start_[cell]; k < start_[cell + 1]; ++k) {
            const std::int32_t idx = order_[static_cast<std::size_t>(k)];
            const double d = (points_[static_cast<std::size_t>(idx)] - query).squaredNorm();
            if (d < best) {
              best = d;
              best_idx = idx;
            }
          }
        }
      }
    }
    if (!any_cell && std::isfinite(best)) break;
  }
  return Hit{best_idx, best};
}

}  // namespace voxsr::metrics
