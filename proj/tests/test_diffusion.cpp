#include <doctest.h>

#include <cmath>

#include "voxsr/common/rng.hpp"
#include "voxsr/diffusion/diffusion.hpp"

using namespace voxsr;
using namespace voxsr::diffusion;

TEST_CASE("linear schedule endpoints at the reference length") {
  const auto s = make_schedule(1000, ScheduleKind::Linear);
  CHECK(s.beta_at(1) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(s.beta_at(1000) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("schedule invariants for both kinds and several lengths") {
  for (auto kind : {ScheduleKind::Linear, ScheduleKind::Cosine}) {
    for (int T : {64, 256, 1024}) {
      INFO(to_string(kind), " T=", T);
      const auto s = make_schedule(T, kind);
      s.check_valid();
      CHECK(s.alpha_bar_at(1) > 0.99);
      CHECK(s.alpha_bar_at(T) < 0.01);
      double prev = 1.0;
      for (int t = 1; t <= T; ++t) {
        REQUIRE(s.alpha_bar_at(t) < prev);
        REQUIRE(s.beta_at(t) > 0.0);
        REQUIRE(s.beta_at(t) < 1.0);
        prev = s.alpha_bar_at(t);
      }
    }
  }
}

TEST_CASE("make_schedule rejects T < 2") {
  CHECK_THROWS_AS(make_schedule(1, ScheduleKind::Linear), std::invalid_argument);
}

TEST_CASE("q_sample closed form") {
  const auto s = make_schedule(64, ScheduleKind::Cosine);
  Rng rng(61);
  const std::vector<double> f0 = rng.normal_vec(32);
  const std::vector<double> eps = rng.normal_vec(32);

  SUBCASE("zero f0 leaves the scaled noise") {
    const std::vector<double> zeros(32, 0.0);
    const auto out = q_sample(zeros, 20, eps, s);
    const double c = std::sqrt(1.0 - s.alpha_bar_at(20));
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i] == doctest::Approx(c * eps[i]).epsilon(1e-14));
    }
  }
  SUBCASE("zero noise leaves the scaled signal") {
    const std::vector<double> zeros(32, 0.0);
    const auto out = q_sample(f0, 20, zeros, s);
    const double c = std::sqrt(s.alpha_bar_at(20));
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i] == doctest::Approx(c * f0[i]).epsilon(1e-14));
    }
  }
  SUBCASE("shape mismatch throws") {
    const std::vector<double> small(8, 0.0);
    CHECK_THROWS_AS(q_sample(f0, 5, small, s), std::invalid_argument);
  }
}

TEST_CASE("q_sample empirical moments match the closed form within 1 percent") {
  const auto s = make_schedule(256, ScheduleKind::Cosine);
  const int t = 128;
  const std::vector<double> f0 = {1.0, -1.0, 1.5, -1.5, 2.0, -2.0, 1.2, -0.8};
  const std::size_t m = f0.size();
  const std::int64_t n = 100000;

  Rng rng(62);
  std::vector<double> sum(m, 0.0), sum_sq(m, 0.0), eps(m);
  for (std::int64_t k = 0; k < n; ++k) {
    for (auto& e : eps) e = rng.normal();
    const auto out = q_sample(f0, t, eps, s);
    for (std::size_t i = 0; i < m; ++i) {
      sum[i] += out[i];
      sum_sq[i] += out[i] * out[i];
    }
  }
  const double ab = s.alpha_bar_at(t);
  for (std::size_t i = 0; i < m; ++i) {
    const double mean = sum[i] / n;
    const double var = sum_sq[i] / n - mean * mean;
    CHECK(std::abs(mean - std::sqrt(ab) * f0[i]) < 0.01 * std::abs(std::sqrt(ab) * f0[i]));
    CHECK(std::abs(var - (1.0 - ab)) < 0.01 * (1.0 - ab));
  }
}

TEST_CASE("stepwise chain matches the closed form in distribution") {
  const auto s = make_schedule(256, ScheduleKind::Cosine);
  Rng rng(63);
  std::vector<double> f0(48);
  for (auto& v : f0) v = rng.uniform(-1.5, 1.5);
  for (int t : {1, 16}) {
    const auto report = chain_equivalence_check(f0, t, s, 20000, 1234);
    INFO("t=", t, " mean_z=", report.mean_z, " var_z=", report.var_z, " worst=",
         report.worst_elem_z);
    CHECK(report.pass);
  }
}

namespace {

tensor::Shape latent_shape() { return {4, 4, 4}; }

DenoiseFn stub_returning(const std::vector<double>& values) {
  return [values](const tensor::Array&, int, const tensor::Array&) {
    return tensor::Array::from_vector(latent_shape(), values);
  };
}

}  // namespace

TEST_CASE("diffusion_loss against oracle predictors") {
  const auto s = make_schedule(64, ScheduleKind::Cosine);
  Rng rng(64);
  const std::vector<double> f0 = rng.normal_vec(64);
  const std::vector<double> eps = rng.normal_vec(64);
  const tensor::Array cond = tensor::Array::constant(latent_shape(), 0.0);

  SUBCASE("a perfect noise predictor gives zero loss") {
    const auto loss = diffusion_loss(f0, cond, 10, eps, stub_returning(eps), latent_shape(), s,
                                     PredTarget::Noise, LossKind::L2);
    CHECK(loss.scalar() == 0.0);
  }
  SUBCASE("a perfect f0 predictor gives zero loss under the x0 target") {
    const auto loss = diffusion_loss(f0, cond, 10, eps, stub_returning(f0), latent_shape(), s,
                                     PredTarget::X0, LossKind::L2);
    CHECK(loss.scalar() == 0.0);
  }
  SUBCASE("a zero predictor under the noise target costs about E[eps^2]") {
    Rng big_rng(65);
    const std::vector<double> big_eps = big_rng.normal_vec(64);
    const std::vector<double> zeros(64, 0.0);
    const auto loss = diffusion_loss(f0, cond, 10, big_eps, stub_returning(zeros),
                                     latent_shape(), s, PredTarget::Noise, LossKind::L2);
    double expect = 0.0;
    for (double e : big_eps) expect += e * e;
    expect /= 64.0;
    CHECK(loss.scalar() == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("sampler determinism and oracle recovery") {
  const auto s = make_schedule(128, ScheduleKind::Cosine);
  Rng rng(66);
  std::vector<double> f0(64);
  for (auto& v : f0) v = rng.uniform(-0.9, 0.9);
  const std::vector<double> cond(64, 0.0);

  SUBCASE("same seed gives identical outputs") {
    const auto stub = stub_returning(f0);
    const auto a = sample(stub, cond, latent_shape(), 32, s, PredTarget::X0, 99);
    const auto b = sample(stub, cond, latent_shape(), 32, s, PredTarget::X0, 99);
    CHECK(a == b);
  }
  SUBCASE("x0 oracle at steps = T recovers f0") {
    const auto out = sample(stub_returning(f0), cond, latent_shape(), 128, s, PredTarget::X0, 7);
    double worst = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      worst = std::max(worst, std::abs(out[i] - f0[i]));
    }
    CHECK(worst < 1e-6);
  }
  SUBCASE("noise oracle at steps = T recovers f0") {
    // The oracle inverts the closed form at the queried timestep.
    const DenoiseFn oracle = [&f0, &s](const tensor::Array& f_t, int t, const tensor::Array&) {
      const double ab = s.alpha_bar_at(t);
      std::vector<double> eps_hat(f_t.values().size());
      for (std::size_t i = 0; i < eps_hat.size(); ++i) {
        eps_hat[i] = (f_t.values()[i] - std::sqrt(ab) * f0[i]) / std::sqrt(1.0 - ab);
      }
      return tensor::Array::from_vector(f_t.shape(), eps_hat);
    };
    const auto out = sample(oracle, cond, latent_shape(), 128, s, PredTarget::Noise, 7);
    double worst = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      worst = std::max(worst, std::abs(out[i] - f0[i]));
    }
    CHECK(worst < 1e-6);
  }
  SUBCASE("strided runs stay finite for the tested step presets") {
    // A crude affine stand-in for a trained network.
    const DenoiseFn net = [](const tensor::Array& f_t, int, const tensor::Array& c) {
      return tensor::add(tensor::scale(f_t, 0.9), tensor::scale(c, 0.05));
    };
    const auto s1024 = make_schedule(1024, ScheduleKind::Cosine);
    for (int steps : {32, 64, 128}) {
      const auto out = sample(net, cond, latent_shape(), steps, s1024, PredTarget::Noise, 5);
      for (double v : out) REQUIRE(std::isfinite(v));
    }
  }
  SUBCASE("steps above T throw") {
    CHECK_THROWS_AS(sample(stub_returning(f0), cond, latent_shape(), 256, s, PredTarget::X0, 1),
                    std::invalid_argument);
  }
  SUBCASE("ancestral flag runs at full T and stays deterministic per seed") {
    SampleOptions opts;
    opts.ancestral = true;
    const auto stub = stub_returning(f0);
    const auto a = sample(stub, cond, latent_shape(), 128, s, PredTarget::X0, 11, opts);
    const auto b = sample(stub, cond, latent_shape(), 128, s, PredTarget::X0, 11, opts);
    CHECK(a == b);
    for (double v : a) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("sample timesteps are evenly spaced and descending") {
  const auto ts = sample_timesteps(1024, 128);
  REQUIRE(ts.size() == 128);
  CHECK(ts.front() == 1024);
  CHECK(ts.back() == 8);
  for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i - 1] - ts[i] == 8);
}
