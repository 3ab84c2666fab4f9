#include <doctest.h>

#include <filesystem>

#include "voxsr/common/rng.hpp"
#include "voxsr/voxel/grid.hpp"
#include "voxsr/voxel/targets.hpp"

using namespace voxsr;
using namespace voxsr::voxel;

namespace {

VoxelGridSpec desk_grid() {
  VoxelGridSpec spec;
  spec.origin = Vec3(-2.0, -2.0, -0.5);
  spec.dims = {32, 32, 8};
  spec.edge = Vec3(0.125, 0.125, 0.125);
  spec.check_valid();
  return spec;
}

PointCloud random_cloud_in(const VoxelGridSpec& spec, Rng& rng, std::size_t n) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) {
      p[a] = rng.uniform(spec.origin[a], spec.origin[a] + spec.dims[a] * spec.edge[a] - 1e-9);
    }
    c.points.push_back(p);
  }
  return c;
}

}  // namespace

TEST_CASE("voxelize puts a single point at a voxel center into one cell") {
  const auto spec = desk_grid();
  PointCloud c;
  c.points.push_back(spec.voxel_center(3, 4, 5));
  const auto vc = voxelize(c, spec);
  REQUIRE(vc.occupied_count() == 1);
  CHECK(vc.cells[0].first == spec.linear_index(3, 4, 5));
  CHECK((vc.cells[0].second.mean() - spec.voxel_center(3, 4, 5)).norm() < 1e-12);
  CHECK(vc.dropped == 0);
}

TEST_CASE("voxelize averages points inside one voxel") {
  const auto spec = desk_grid();
  const Vec3 base = spec.voxel_min(10, 10, 2);
  PointCloud c;
  c.points.push_back(base + Vec3(0.01, 0.02, 0.03));
  c.points.push_back(base + Vec3(0.11, 0.04, 0.05));
  c.points.push_back(base + Vec3(0.06, 0.09, 0.01));
  c.points.push_back(base + Vec3(0.02, 0.05, 0.11));
  const auto vc = voxelize(c, spec);
  REQUIRE(vc.occupied_count() == 1);
  const Vec3 expect = base + Vec3(0.05, 0.05, 0.05);  // hand average of the offsets
  CHECK((vc.cells[0].second.mean() - expect).norm() < 1e-12);
}

TEST_CASE("voxelize conserves in-bounds points and counts dropped ones") {
  const auto spec = desk_grid();
  Rng rng(31);
  PointCloud c = random_cloud_in(spec, rng, 1000);
  c.points.emplace_back(100, 0, 0);                       // far outside
  c.points.push_back(spec.origin + Vec3(4.0, 0.1, 0.1));  // exactly on the +x boundary
  const auto vc = voxelize(c, spec);
  std::int64_t total = 0;
  for (const auto& [_, stats] : vc.cells) total += stats.count;
  CHECK(total == 1000);
  CHECK(vc.dropped == 2);
  CHECK(total + vc.dropped == static_cast<std::int64_t>(c.size()));
}

TEST_CASE("derive_targets offsets") {
  const auto spec = desk_grid();

  SUBCASE("point at a voxel center has zero offset") {
    PointCloud c;
    c.points.push_back(spec.voxel_center(5, 6, 3));
    const auto targets = derive_targets(voxelize(c, spec));
    const auto n = static_cast<std::size_t>(spec.voxel_count());
    const auto linear = static_cast<std::size_t>(spec.linear_index(5, 6, 3));
    CHECK(targets.full.mask[linear] == 1.0);
    for (int a = 0; a < 3; ++a) {
      CHECK(std::abs(targets.full.offset[a * n + linear]) < 1e-12);
    }
  }

  SUBCASE("point just inside a voxel min corner has offset near -edge/2") {
    PointCloud c;
    const double eps = 1e-6;
    c.points.push_back(spec.voxel_min(7, 8, 1) + Vec3(eps, eps, eps));
    const auto targets = derive_targets(voxelize(c, spec));
    const auto n = static_cast<std::size_t>(spec.voxel_count());
    const auto linear = static_cast<std::size_t>(spec.linear_index(7, 8, 1));
    for (int a = 0; a < 3; ++a) {
      CHECK(targets.full.offset[a * n + linear] ==
            doctest::Approx(-spec.edge[a] / 2 + eps).epsilon(1e-6));
    }
  }
}

TEST_CASE("offsets never exceed half the voxel edge and parents dominate children") {
  const auto spec = desk_grid();
  Rng rng(32);
  const auto targets = derive_targets(voxelize(random_cloud_in(spec, rng, 2000), spec));

  for (const auto* st : {&targets.full, &targets.half, &targets.quarter}) {
    const auto n = static_cast<std::size_t>(st->spec.voxel_count());
    for (std::size_t i = 0; i < n; ++i) {
      if (st->mask[i] != 1.0) continue;
      for (int a = 0; a < 3; ++a) {
        CHECK(std::abs(st->offset[a * n + i]) <= st->spec.edge[a] / 2 + 1e-12);
      }
    }
  }

  // Every occupied fine voxel implies its parent is occupied at 1/2 and 1/4.
  const auto& full = targets.full;
  for (std::size_t linear = 0; linear < full.mask.size(); ++linear) {
    if (full.mask[linear] != 1.0) continue;
    const auto [ix, iy, iz] = full.spec.unravel(static_cast<std::int64_t>(linear));
    CHECK(targets.half.mask[static_cast<std::size_t>(
              targets.half.spec.linear_index(ix / 2, iy / 2, iz / 2))] == 1.0);
    CHECK(targets.quarter.mask[static_cast<std::size_t>(
              targets.quarter.spec.linear_index(ix / 4, iy / 4, iz / 4))] == 1.0);
  }
}

TEST_CASE("reconstruct round trip recovers per-voxel means") {
  const auto spec = desk_grid();
  Rng rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    PointCloud c = random_cloud_in(spec, rng, 500 + trial * 200);
    const auto vc = voxelize(c, spec);
    const auto targets = derive_targets(vc);
    PointCloud rec = reconstruct(targets.full.mask, targets.full.offset, spec, 0.5);
    PointCloud means = voxel_means(vc);
    REQUIRE(rec.size() == means.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
      CHECK((rec.points[i] - means.points[i]).norm() < 1e-9);
    }
  }
}

TEST_CASE("reconstruct edge cases") {
  const auto spec = desk_grid();
  const auto n = static_cast<std::size_t>(spec.voxel_count());

  SUBCASE("single voxel at probability one with zero offset lands on the center") {
    std::vector<double> mask(n, 0.0), offset(3 * n, 0.0);
    mask[static_cast<std::size_t>(spec.linear_index(1, 2, 3))] = 1.0;
    PointCloud rec = reconstruct(mask, offset, spec, 0.5);
    REQUIRE(rec.size() == 1);
    CHECK((rec.points[0] - spec.voxel_center(1, 2, 3)).norm() < 1e-12);
  }
  SUBCASE("an all-zero mask yields an empty cloud") {
    std::vector<double> mask(n, 0.0), offset(3 * n, 0.0);
    CHECK(reconstruct(mask, offset, spec, 0.5).empty());
  }
  SUBCASE("shape mismatch names both shapes") {
    std::vector<double> mask(n - 1, 0.0), offset(3 * n, 0.0);
    CHECK_THROWS_WITH_AS(reconstruct(mask, offset, spec, 0.5), doctest::Contains("expected"),
                         std::invalid_argument);
  }
  SUBCASE("out-of-range offsets are clamped into the voxel") {
    std::vector<double> mask(n, 0.0), offset(3 * n, 0.0);
    const auto linear = static_cast<std::size_t>(spec.linear_index(0, 0, 0));
    mask[linear] = 1.0;
    offset[linear] = 99.0;
    PointCloud rec = reconstruct(mask, offset, spec, 0.5);
    REQUIRE(rec.size() == 1);
    CHECK(rec.points[0].x() == doctest::Approx(spec.voxel_min(0, 0, 0).x() + spec.edge.x()));
  }
}

TEST_CASE("voxel_iou") {
  SUBCASE("identical masks give 1") {
    std::vector<double> a{1, 0, 1, 1};
    CHECK(voxel_iou(a, a) == 1.0);
  }
  SUBCASE("disjoint non-empty masks give 0") {
    std::vector<double> a{1, 0, 0, 0}, b{0, 1, 1, 0};
    CHECK(voxel_iou(a, b) == 0.0);
  }
  SUBCASE("two-voxel overlap of three-voxel masks gives 0.5") {
    std::vector<double> a{1, 1, 1, 0, 0}, b{0, 1, 1, 0, 1};
    CHECK(voxel_iou(a, b) == 0.5);  // intersection 2, union 4
  }
  SUBCASE("both empty gives 1") {
    std::vector<double> a{0, 0}, b{0, 0};
    CHECK(voxel_iou(a, b) == 1.0);
  }
  SUBCASE("shape mismatch throws") {
    std::vector<double> a{1, 0}, b{1};
    CHECK_THROWS_AS(voxel_iou(a, b), std::invalid_argument);
  }
}

TEST_CASE("grid array export round trip") {
  const auto spec = desk_grid();
  Rng rng(34);
  const auto targets = derive_targets(voxelize(random_cloud_in(spec, rng, 300), spec));
  const auto path =
      (std::filesystem::temp_directory_path() / "voxsr_targets_full.bin").string();
  save_grid_array(path, spec, 3, targets.full.offset);
  const auto back = load_grid_array(path);
  CHECK(back.channels == 3);
  CHECK(back.spec.dims == spec.dims);
  CHECK(back.data == targets.full.offset);
}
