#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "voxsr/common/rng.hpp"
#include "voxsr/tensor/array.hpp"
#include "voxsr/tensor/checkpoint.hpp"
#include "voxsr/tensor/gradcheck.hpp"
#include "voxsr/tensor/optim.hpp"

using namespace voxsr;
using namespace voxsr::tensor;

TEST_CASE("conv3d with a 1x1x1 identity kernel is the identity") {
  Rng rng(41);
  Array x = Array::from_vector({2, 3, 4, 4}, rng.normal_vec(2 * 3 * 4 * 4));
  Array w = Array::from_vector({2, 2, 1, 1, 1}, {1, 0, 0, 1});  // per-channel identity
  Array b = Array::constant({2}, 0.0);
  Array y = conv3d(x, w, b, 1, 0);
  REQUIRE(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.values().size(); ++i) CHECK(y.values()[i] == x.values()[i]);
}

TEST_CASE("conv2d matches a hand-computed 2x2 correlation") {
  // 3x3 input, 2x2 kernel, stride 1, no padding.
  Array x = Array::from_vector({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Array w = Array::from_vector({1, 1, 2, 2}, {1, 0, -1, 2});
  Array b = Array::from_vector({1}, {0.5});
  Array y = conv2d(x, w, b, 1, 0);
  REQUIRE(y.shape() == Shape{1, 2, 2});
  // out(y,x) = x00*1 + x01*0 + x10*(-1) + x11*2 + 0.5
  CHECK(y.values()[0] == doctest::Approx(1 - 4 + 10 + 0.5));
  CHECK(y.values()[1] == doctest::Approx(2 - 5 + 12 + 0.5));
  CHECK(y.values()[2] == doctest::Approx(4 - 7 + 16 + 0.5));
  CHECK(y.values()[3] == doctest::Approx(5 - 8 + 18 + 0.5));
}

TEST_CASE("sigmoid value and gradient at zero") {
  Array x = Array::param({1}, {0.0});
  Array y = sigmoid(x);
  CHECK(y.scalar() == doctest::Approx(0.5));
  backward(sum(y));
  CHECK(x.grad()[0] == doctest::Approx(0.25));
}

TEST_CASE("loss values") {
  SUBCASE("bce of a perfect prediction is at most 1e-6") {
    Array target = Array::from_vector({4}, {1, 0, 1, 0});
    Array prob = Array::from_vector({4}, {1, 0, 1, 0});
    CHECK(bce(prob, target).scalar() <= 1e-6);
  }
  SUBCASE("l1([1,2],[0,0]) = 1.5") {
    CHECK(l1(Array::from_vector({2}, {1, 2}), Array::from_vector({2}, {0, 0})).scalar() ==
          doctest::Approx(1.5));
  }
  SUBCASE("mse(x,x) = 0") {
    Array x = Array::from_vector({3}, {1, -2, 3});
    CHECK(mse(x, x).scalar() == 0.0);
  }
}

TEST_CASE("backward basics") {
  Rng rng(42);
  SUBCASE("gradient of sum is all ones") {
    Array x = Array::param({2, 3}, rng.normal_vec(6));
    backward(sum(x));
    for (double g : x.grad()) CHECK(g == 1.0);
  }
  SUBCASE("backward twice without reset throws") {
    Array x = Array::param({2}, {1, 2});
    Array loss = mean(mul(x, x));
    backward(loss);
    CHECK_THROWS_WITH_AS(backward(loss), doctest::Contains("twice"), std::runtime_error);
  }
  SUBCASE("backward on a non-scalar output throws") {
    Array x = Array::param({2}, {1, 2});
    CHECK_THROWS_WITH_AS(backward(mul(x, x)), doctest::Contains("non-scalar"),
                         std::runtime_error);
  }
  SUBCASE("shape mismatch names the op and shapes") {
    Array a = Array::constant({2}, 0.0);
    Array b = Array::constant({3}, 0.0);
    CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("add"), std::invalid_argument);
  }
}

TEST_CASE("d mse(Wx, y) / dW matches finite differences") {
  Rng rng(43);
  Array w = Array::param({3, 4}, rng.normal_vec(12));
  Array x = Array::from_vector({4, 1}, rng.normal_vec(4));
  Array y = Array::from_vector({3, 1}, rng.normal_vec(3));
  std::vector<Array> inputs{w};
  auto build = [&x, &y](std::vector<Array>& in) { return mse(matmul(in[0], x), y); };
  CHECK(finite_diff_max_rel_err(build, inputs) < 1e-4);
}

TEST_CASE("registered gradchecks pass on a quick pass") {
  // Two trials here; the acceptance suite runs the full ten.
  for (const auto& res : run_gradchecks(7, 2)) {
    INFO(res.name, " max rel err ", res.max_rel_err);
    CHECK(res.pass);
  }
}

TEST_CASE("forward and backward stay finite on a random composite graph") {
  Rng rng(44);
  Array x = Array::param({4, 6, 6}, rng.normal_vec(4 * 6 * 6));
  Array w = Array::param({4, 4, 3, 3}, rng.normal_vec(4 * 4 * 3 * 3));
  Array b = Array::param({4}, rng.normal_vec(4));
  Array gamma = Array::param({4}, std::vector<double>(4, 1.0));
  Array beta = Array::param({4}, std::vector<double>(4, 0.0));
  Array h = silu(group_norm(conv2d(x, w, b, 1, 1), 2, gamma, beta));
  Array loss = mean(mul(h, h));
  backward(loss);
  CHECK(std::isfinite(loss.scalar()));
  for (const auto* arr : {&x, &w, &b, &gamma, &beta}) {
    for (double g : arr->grad()) REQUIRE(std::isfinite(g));
  }
}

TEST_CASE("adamw") {
  SUBCASE("one step on f(w)=w^2 from w=1 shrinks the weight") {
    Array w = Array::param({1}, {1.0});
    AdamWConfig cfg;
    cfg.lr = 0.1;
    AdamW opt({w}, cfg);
    backward(mul(w, w));
    opt.step();
    CHECK(std::abs(w.values()[0]) < 1.0);
  }
  SUBCASE("zero gradient and zero weight decay leave parameters unchanged") {
    Array w = Array::param({2}, {0.7, -0.3});
    AdamW opt({w}, AdamWConfig{});
    opt.step();
    CHECK(w.values()[0] == 0.7);
    CHECK(w.values()[1] == -0.3);
  }
  SUBCASE("200 steps on a two-parameter quadratic reach loss < 1e-6") {
    Array w = Array::param({2}, {0.8, -0.6});
    AdamWConfig cfg;
    cfg.lr = 0.05;
    AdamW opt({w}, cfg);
    double last = 1.0;
    for (int i = 0; i < 200; ++i) {
      Array loss = sum(mul(w, w));
      last = loss.scalar();
      backward(loss);
      opt.step();
      opt.zero_grad();
    }
    CHECK(last < 1e-6);
  }
  SUBCASE("non-finite gradients are rejected") {
    Array w = Array::param({1}, {1.0});
    AdamW opt({w}, AdamWConfig{});
    Array huge = Array::param({1}, {1e308});
    Array loss = mul(mul(huge, huge), w);  // overflows to inf in the graph
    backward(loss);
    w.node()->grad[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(opt.step(), doctest::Contains("non-finite"), std::runtime_error);
  }
}

TEST_CASE("checkpoint round trip preserves values and meta") {
  Rng rng(45);
  ParamStore store;
  store.add("enc.w", Array::param({3, 2}, rng.normal_vec(6)));
  store.add("enc.b", Array::param({3}, rng.normal_vec(3)));
  const auto w_before = store.get("enc.w").values();

  const auto path = (std::filesystem::temp_directory_path() / "voxsr_ckpt_test.bin").string();
  nlohmann::json meta;
  meta["kind"] = "test";
  save_checkpoint(path, store, meta);

  CHECK(load_checkpoint_meta(path)["kind"] == "test");

  ParamStore fresh;
  fresh.add("enc.w", Array::param({3, 2}, std::vector<double>(6, 0.0)));
  fresh.add("enc.b", Array::param({3}, std::vector<double>(3, 0.0)));
  load_checkpoint_into(path, fresh);
  CHECK(fresh.get("enc.w").values() == w_before);

  ParamStore wrong;
  wrong.add("enc.w", Array::param({2, 2}, std::vector<double>(4, 0.0)));
  wrong.add("enc.b", Array::param({3}, std::vector<double>(3, 0.0)));
  CHECK_THROWS_WITH_AS(load_checkpoint_into(path, wrong), doctest::Contains("enc.w"),
                       std::runtime_error);

  ParamStore missing;
  missing.add("enc.w", Array::param({3, 2}, std::vector<double>(6, 0.0)));
  missing.add("enc.b", Array::param({3}, std::vector<double>(3, 0.0)));
  missing.add("extra", Array::param({1}, {0.0}));
  CHECK_THROWS_WITH_AS(load_checkpoint_into(path, missing), doctest::Contains("extra"),
                       std::runtime_error);
}

TEST_CASE("frozen parameters receive no gradient buffers") {
  Rng rng(46);
  Array frozen = Array::param({3}, rng.normal_vec(3));
  frozen.set_requires_grad(false);
  Array live = Array::param({3}, rng.normal_vec(3));
  backward(sum(mul(add(frozen, live), live)));
  CHECK(!frozen.has_grad());
  CHECK(live.has_grad());
}
