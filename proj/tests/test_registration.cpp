#include <doctest.h>

#include <cmath>

#include "voxsr/common/rng.hpp"
#include "voxsr/registration/eval.hpp"
#include "voxsr/registration/icp.hpp"
#include "voxsr/synthdata/scene.hpp"

using namespace voxsr;
using namespace voxsr::registration;
using geometry::RigidTransform;
using geometry::Vec3;

TEST_CASE("evaluate_registration analytic cases") {
  const auto identity = RigidTransform::identity();

  SUBCASE("estimate equals ground truth") {
    const auto r = evaluate_registration(identity, identity);
    CHECK(r.re_deg == doctest::Approx(0.0));
    CHECK(r.te_m == doctest::Approx(0.0));
    CHECK(r.success);
  }
  SUBCASE("a 90 degree z rotation fails") {
    const auto est = RigidTransform::from_axis_angle(Vec3(0, 0, 1), M_PI / 2);
    const auto r = evaluate_registration(est, identity);
    CHECK(r.re_deg == doctest::Approx(90.0));
    CHECK(!r.success);
  }
  SUBCASE("0.3 m translation offset with matching rotation succeeds") {
    RigidTransform est;
    est.translation = Vec3(0.3, 0, 0);
    const auto r = evaluate_registration(est, identity);
    CHECK(r.te_m == doctest::Approx(0.3));
    CHECK(r.re_deg == doctest::Approx(0.0));
    CHECK(r.success);
  }
}

TEST_CASE("rotation error symmetry and common-rotation invariance") {
  Rng rng(81);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = RigidTransform::from_axis_angle(
        Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized(),
        rng.uniform(-M_PI, M_PI));
    const auto b = RigidTransform::from_axis_angle(
        Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized(),
        rng.uniform(-M_PI, M_PI));
    const double re_ab = evaluate_registration(a, b).re_deg;
    const double re_ba = evaluate_registration(b, a).re_deg;
    CHECK(re_ab == doctest::Approx(re_ba).epsilon(1e-9));

    const auto common = RigidTransform::from_axis_angle(Vec3(0.2, 0.5, 0.9).normalized(), 1.1);
    RigidTransform ca, cb;
    ca.rotation = common.rotation * a.rotation;
    cb.rotation = common.rotation * b.rotation;
    CHECK(evaluate_registration(ca, cb).re_deg == doctest::Approx(re_ab).epsilon(1e-9));
    CHECK(evaluate_registration(a, a).re_deg == doctest::Approx(0.0));
  }
}

TEST_CASE("align_pairs recovers an exact correspondence in closed form") {
  Rng rng(82);
  std::vector<Vec3> src;
  for (int i = 0; i < 40; ++i) {
    src.emplace_back(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-1, 1));
  }
  const auto T = RigidTransform::from_axis_angle(Vec3(0.1, 0.2, 1.0).normalized(), 0.4,
                                                 Vec3(0.5, -0.2, 0.1));
  std::vector<Vec3> tgt;
  for (const auto& p : src) tgt.push_back(T.apply(p));

  const auto est = align_pairs(src, tgt);
  CHECK((est.rotation - T.rotation).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((est.translation - T.translation).norm() < 1e-9);
}

TEST_CASE("align_pairs rejects collinear correspondences") {
  std::vector<Vec3> src, tgt;
  for (int i = 0; i < 10; ++i) {
    src.emplace_back(i, 0, 0);
    tgt.emplace_back(i, 0, 0);
  }
  CHECK_THROWS_WITH_AS(align_pairs(src, tgt), doctest::Contains("degenerate"),
                       std::runtime_error);
}

namespace {

geometry::PointCloud structured_scene(std::uint64_t seed) {
  synthdata::SceneSpec spec;
  spec.seed = seed;
  spec.density = 220.0;
  return synthdata::generate_scene(spec).lidar;
}

}  // namespace

TEST_CASE("icp fixed point on identical clouds") {
  const auto cloud = structured_scene(5);
  const auto result = icp(cloud, cloud, RigidTransform::identity());
  CHECK((result.transform.rotation - geometry::Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(result.transform.translation.norm() < 1e-9);
  CHECK(result.final_residual == doctest::Approx(0.0));
}

TEST_CASE("icp recovers a known transform on a structured scene") {
  const auto source = structured_scene(6);
  const auto T = RigidTransform::from_axis_angle(Vec3(0, 0, 1), 5.0 * M_PI / 180.0,
                                                 Vec3(0.2, 0.0, 0.0));
  const auto target = geometry::apply_transform(source, T);

  const auto result = icp(source, target, RigidTransform::identity());
  const auto eval = evaluate_registration(result.transform, T);
  CHECK(eval.re_deg < 0.1);
  CHECK(eval.te_m < 1e-3);

  SUBCASE("mean residual is non-increasing") {
    for (std::size_t i = 1; i < result.residual_history.size(); ++i) {
      CHECK(result.residual_history[i] <= result.residual_history[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("icp rejects degenerate input") {
  geometry::PointCloud tiny;
  tiny.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  CHECK_THROWS_AS(icp(tiny, tiny, RigidTransform::identity()), std::invalid_argument);
}

TEST_CASE("registration recall summaries") {
  RegResult ok;
  ok.success = true;
  ok.re_deg = 1.0;
  ok.te_m = 0.1;
  RegResult bad;
  bad.success = false;
  bad.re_deg = 10.0;
  bad.te_m = 1.0;

  SUBCASE("all successes") {
    const auto s = registration_recall({ok, ok, ok});
    CHECK(s.recall_pct == doctest::Approx(100.0));
    CHECK(*s.re_succ == doctest::Approx(s.re_all));
    CHECK(*s.te_succ == doctest::Approx(s.te_all));
  }
  SUBCASE("one of two") {
    const auto s = registration_recall({ok, bad});
    CHECK(s.recall_pct == doctest::Approx(50.0));
  }
  SUBCASE("hand-computed means over four results") {
    RegResult r1 = ok, r2 = ok, r3 = bad, r4 = bad;
    r2.re_deg = 3.0;
    r2.te_m = 0.3;
    const auto s = registration_recall({r1, r2, r3, r4});
    CHECK(s.recall_pct == doctest::Approx(50.0));
    CHECK(*s.re_succ == doctest::Approx(2.0));          // (1+3)/2
    CHECK(*s.te_succ == doctest::Approx(0.2));          // (0.1+0.3)/2
    CHECK(s.re_all == doctest::Approx((1 + 3 + 10 + 10) / 4.0));
    CHECK(s.te_all == doctest::Approx((0.1 + 0.3 + 1 + 1) / 4.0));
  }
  SUBCASE("empty list throws") {
    CHECK_THROWS_AS(registration_recall({}), std::invalid_argument);
  }
}
