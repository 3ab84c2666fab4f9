#include <doctest.h>

#include <cmath>

#include "voxsr/common/rng.hpp"
#include "voxsr/geometry/point_cloud.hpp"
#include "voxsr/geometry/preprocess.hpp"

using namespace voxsr;
using namespace voxsr::geometry;

namespace {

PointCloud random_cloud(Rng& rng, std::size_t n, double extent = 5.0) {
  PointCloud c;
  c.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.points.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                          rng.uniform(-extent, extent));
  }
  return c;
}

RigidTransform random_transform(Rng& rng) {
  const Vec3 axis(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  const Vec3 t(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
  return RigidTransform::from_axis_angle(axis.normalized(), rng.uniform(-M_PI, M_PI), t);
}

}  // namespace

TEST_CASE("apply_transform identity leaves the cloud unchanged") {
  Rng rng(1);
  PointCloud c = random_cloud(rng, 50);
  c.attrs["intensity"] = std::vector<float>(50, 0.5f);
  PointCloud out = apply_transform(c, RigidTransform::identity());
  REQUIRE(out.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(out.points[i] == c.points[i]);
  CHECK(out.attrs.at("intensity") == c.attrs.at("intensity"));
}

TEST_CASE("apply_transform rotates (1,0,0) to (0,1,0) under a 90 degree z rotation") {
  PointCloud c;
  c.points.emplace_back(1, 0, 0);
  const auto T = RigidTransform::from_axis_angle(Vec3(0, 0, 1), M_PI / 2);
  PointCloud out = apply_transform(c, T);
  CHECK(std::abs(out.points[0].x()) < 1e-12);
  CHECK(std::abs(out.points[0].y() - 1.0) < 1e-12);
  CHECK(std::abs(out.points[0].z()) < 1e-12);
}

TEST_CASE("apply_transform then analytic inverse recovers the points") {
  Rng rng(2);
  PointCloud c = random_cloud(rng, 100);
  const auto T = random_transform(rng);
  T.check_valid(1e-12);
  PointCloud back = apply_transform(apply_transform(c, T), T.inverse());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK((back.points[i] - c.points[i]).norm() < 1e-9);
  }
}

TEST_CASE("apply_transform preserves pairwise distances") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    PointCloud c = random_cloud(rng, 40);
    PointCloud moved = apply_transform(c, random_transform(rng));
    double worst = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        const double before = (c.points[i] - c.points[j]).norm();
        const double after = (moved.points[i] - moved.points[j]).norm();
        worst = std::max(worst, std::abs(before - after));
      }
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("remove_ground strips a synthetic plane scene") {
  Rng rng(4);
  PointCloud c;
  for (int i = 0; i < 500; ++i) {
    c.points.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5), 0.0);
  }
  for (int i = 0; i < 50; ++i) {
    c.points.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(1.0, 2.0));
  }
  PointCloud out = remove_ground(c, 0.1, 256, 7);
  REQUIRE(out.size() == 50);
  for (const auto& p : out.points) CHECK(p.z() >= 1.0);
}

TEST_CASE("remove_ground leaves unstructured clouds alone") {
  Rng rng(5);
  PointCloud c = random_cloud(rng, 100, 3.0);

  // Brute force over every 3-point near-horizontal plane: no candidate may
  // reach the 20% inlier floor, so RANSAC must not fire.
  const double thresh = 0.05;
  const double min_nz = std::cos(30.0 * M_PI / 180.0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      for (std::size_t k = j + 1; k < c.size(); ++k) {
        Vec3 n = (c.points[j] - c.points[i]).cross(c.points[k] - c.points[i]);
        const double norm = n.norm();
        if (norm < 1e-12) continue;
        n /= norm;
        if (std::abs(n.z()) < min_nz) continue;
        const double d = -n.dot(c.points[i]);
        std::size_t inliers = 0;
        for (const auto& p : c.points) {
          if (std::abs(n.dot(p) + d) <= thresh) ++inliers;
        }
        best = std::max(best, inliers);
      }
    }
  }
  REQUIRE(best < 20);

  PointCloud out = remove_ground(c, thresh, 512, 11);
  REQUIRE(out.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(out.points[i] == c.points[i]);
}

TEST_CASE("remove_ground on an empty cloud returns an empty cloud") {
  PointCloud empty;
  CHECK(remove_ground(empty, 0.1, 32, 0).empty());
}

TEST_CASE("remove_ground output is a subset of the input") {
  Rng rng(6);
  PointCloud c;
  for (int i = 0; i < 300; ++i) {
    c.points.emplace_back(rng.uniform(-4, 4), rng.uniform(-4, 4),
                          rng.uniform(0, 1) < 0.6 ? rng.normal(0.0, 0.02) : rng.uniform(0.2, 2.0));
  }
  PointCloud out = remove_ground(c, 0.08, 128, 3);
  CHECK(out.size() <= c.size());
  std::size_t cursor = 0;
  for (const auto& p : out.points) {
    while (cursor < c.size() && c.points[cursor] != p) ++cursor;
    REQUIRE(cursor < c.size());  // order-preserving subset
  }
}

TEST_CASE("crop_fov keeps the sector and bounds") {
  FovSpec fov;
  fov.yaw_min_deg = 30.0;
  fov.yaw_max_deg = 150.0;
  fov.min_bound = Vec3(-16, -16, -0.5);
  fov.max_bound = Vec3(16, 16, 3.5);

  PointCloud c;
  c.points.emplace_back(0, 1, 0);   // yaw 90, kept
  c.points.emplace_back(1, 0, 0);   // yaw 0, dropped
  c.points.emplace_back(0, 1, 4.0); // z above bound, dropped
  PointCloud out = crop_fov(c, fov);
  REQUIRE(out.size() == 1);
  CHECK(out.points[0] == Vec3(0, 1, 0));
}

TEST_CASE("crop_fov with a full sphere is the identity and idempotent") {
  Rng rng(8);
  PointCloud c = random_cloud(rng, 200);
  const FovSpec fov = FovSpec::full();
  PointCloud once = crop_fov(c, fov);
  REQUIRE(once.size() == c.size());

  FovSpec narrow;
  narrow.yaw_min_deg = -45;
  narrow.yaw_max_deg = 120;
  narrow.min_bound = Vec3(-3, -3, -3);
  narrow.max_bound = Vec3(3, 3, 3);
  PointCloud a = crop_fov(c, narrow);
  PointCloud b = crop_fov(a, narrow);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.points[i] == b.points[i]);
  CHECK(a.size() <= c.size());
}

TEST_CASE("aggregate_frames basics") {
  Rng rng(9);
  PointCloud a = random_cloud(rng, 10);
  PointCloud b = random_cloud(rng, 10);

  SUBCASE("single identity frame") {
    PointCloud out = aggregate_frames({{a, RigidTransform::identity()}});
    REQUIRE(out.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(out.points[i] == a.points[i]);
  }
  SUBCASE("two frames concatenate") {
    PointCloud out =
        aggregate_frames({{a, RigidTransform::identity()}, {b, RigidTransform::identity()}});
    CHECK(out.size() == 20);
  }
  SUBCASE("empty frame list throws") {
    CHECK_THROWS_WITH_AS(aggregate_frames({}), doctest::Contains("no frames"),
                         std::invalid_argument);
  }
}

TEST_CASE("aggregate_frames realigns a static scene observed from five poses") {
  Rng rng(10);
  PointCloud scene = random_cloud(rng, 50);
  std::vector<std::pair<PointCloud, RigidTransform>> frames;
  for (int f = 0; f < 5; ++f) {
    const auto pose = random_transform(rng);
    // Sensor-frame observation of the static scene.
    frames.emplace_back(apply_transform(scene, pose.inverse()), pose);
  }
  PointCloud merged = aggregate_frames(frames);
  REQUIRE(merged.size() == 250);
  for (std::size_t i = 0; i < merged.size(); ++i) {
    CHECK((merged.points[i] - scene.points[i % 50]).norm() < 1e-9);
  }
}
