#include "voxsr/diffusion/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "voxsr/common/error.hpp"

namespace voxsr::diffusion {

PredTarget pred_target_from_string(const std::string& s) {
  if (s == "noise") return PredTarget::Noise;
  if (s == "x0") return PredTarget::X0;
  fail_arg("unknown prediction target '", s, "' (expected noise or x0)");
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "l2") return LossKind::L2;
  if (s == "l1") return LossKind::L1;
  if (s == "huber") return LossKind::Huber;
  fail_arg("unknown loss kind '", s, "' (expected l2, l1 or huber)");
}

std::string to_string(PredTarget t) { return t == PredTarget::Noise ? "noise" : "x0"; }
std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::L2: return "l2";
    case LossKind::L1: return "l1";
    default: return "huber";
  }
}

std::vector<double> q_sample(const std::vector<double>& f0, int t,
                             const std::vector<double>& eps, const NoiseSchedule& s) {
  if (f0.size() != eps.size()) {
    fail_arg("q_sample: shape mismatch, f0 has ", f0.size(), " values, eps has ", eps.size());
  }
  if (t < 1 || t > s.timesteps) fail_arg("q_sample: t = ", t, " outside [1, ", s.timesteps, "]");
  const double ab = s.alpha_bar_at(t);
  const double c0 = std::sqrt(ab);
  const double c1 = std::sqrt(1.0 - ab);
  std::vector<double> out(f0.size());
  for (std::size_t i = 0; i < f0.size(); ++i) out[i] = c0 * f0[i] + c1 * eps[i];
  return out;
}

ChainCheckReport chain_equivalence_check(const std::vector<double>& f0, int t,
                                         const NoiseSchedule& s, std::int64_t n_samples,
                                         std::uint64_t seed) {
  if (t < 1 || t > s.timesteps) fail_arg("chain check: t outside schedule");
  const std::size_t m = f0.size();
  Rng rng(seed, "chain-equivalence");

  std::vector<double> sum(m, 0.0), sum_sq(m, 0.0), state(m);
  for (std::int64_t n = 0; n < n_samples; ++n) {
    state = f0;
    for (int k = 1; k <= t; ++k) {
      const double keep = std::sqrt(1.0 - s.beta_at(k));
      const double noise = std::sqrt(s.beta_at(k));
      for (std::size_t i = 0; i < m; ++i) state[i] = keep * state[i] + noise * rng.normal();
    }
    for (std::size_t i = 0; i < m; ++i) {
      sum[i] += state[i];
      sum_sq[i] += state[i] * state[i];
    }
  }

  const double ab = s.alpha_bar_at(t);
  const double expect_var = 1.0 - ab;
  const double inv_n = 1.0 / static_cast<double>(n_samples);

  ChainCheckReport report;
  report.t = t;
  report.samples = n_samples;

  // Aggregate deviation of empirical means from sqrt(abar)*f0: the average
  // over elements is Gaussian with sd sigma/sqrt(n*m).
  double mean_dev = 0.0, var_dev = 0.0, worst = 0.0;
  const double elem_mean_sd = std::sqrt(expect_var * inv_n);
  for (std::size_t i = 0; i < m; ++i) {
    const double emp_mean = sum[i] * inv_n;
    const double emp_var = sum_sq[i] * inv_n - emp_mean * emp_mean;
    const double mean_err = emp_mean - std::sqrt(ab) * f0[i];
    mean_dev += mean_err;
    var_dev += emp_var - expect_var;
    const double z_mean = std::abs(mean_err) / elem_mean_sd;
    const double z_var =
        std::abs(emp_var - expect_var) / (expect_var * std::sqrt(2.0 * inv_n));
    worst = std::max({worst, z_mean, z_var});
  }
  const double mean_stat_sd = elem_mean_sd / std::sqrt(static_cast<double>(m));
  const double var_stat_sd = expect_var * std::sqrt(2.0 * inv_n / static_cast<double>(m));
  report.mean_z = std::abs(mean_dev / static_cast<double>(m)) / mean_stat_sd;
  report.var_z = std::abs(var_dev / static_cast<double>(m)) / var_stat_sd;
  report.worst_elem_z = worst;
  report.pass = report.mean_z < 3.0 && report.var_z < 3.0 && report.worst_elem_z < 6.0;
  return report;
}

tensor::Array diffusion_loss(const std::vector<double>& f0, const tensor::Array& cond, int t,
                             const std::vector<double>& eps, const DenoiseFn& denoise,
                             const tensor::Shape& latent_shape, const NoiseSchedule& s,
                             PredTarget target, LossKind kind) {
  using tensor::Array;
  Array f_t = Array::from_vector(latent_shape, q_sample(f0, t, eps, s));
  Array pred = denoise(f_t, t, cond);
  Array truth = target == PredTarget::Noise ? Array::from_vector(latent_shape, eps)
                                            : Array::from_vector(latent_shape, f0);
  switch (kind) {
    case LossKind::L2: return tensor::mse(pred, truth);
    case LossKind::L1: return tensor::l1(pred, truth);
    default: return tensor::huber(pred, truth, 1.0);
  }
}

std::vector<int> sample_timesteps(int timesteps, int steps) {
  if (steps < 1 || steps > timesteps) {
    fail_arg("sample: steps = ", steps, " outside [1, T = ", timesteps, "]");
  }
  std::vector<int> ts(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    // Evenly spaced, descending, ending at the smallest positive stride.
    ts[static_cast<std::size_t>(i)] = static_cast<int>(
        std::llround(static_cast<double>(timesteps) * (steps - i) / steps));
    ts[static_cast<std::size_t>(i)] = std::max(1, ts[static_cast<std::size_t>(i)]);
  }
  return ts;
}

std::vector<double> sample(const DenoiseFn& denoise, const std::vector<double>& cond_values,
                           const tensor::Shape& latent_shape, int steps, const NoiseSchedule& s,
                           PredTarget target, std::uint64_t seed, const SampleOptions& opts) {
  using tensor::Array;
  if (static_cast<std::int64_t>(cond_values.size()) != tensor::numel(latent_shape)) {
    fail_arg("sample: condition has ", cond_values.size(), " values, latent shape is ",
             tensor::shape_str(latent_shape));
  }
  if (opts.ancestral && steps != s.timesteps) {
    fail_arg("sample: ancestral sampling requires steps == T");
  }
  const std::vector<int> ts = sample_timesteps(s.timesteps, steps);
  const std::size_t m = cond_values.size();

  Rng rng(seed, "sampler-init");
  std::vector<double> f(m);
  for (auto& v : f) v = rng.normal();

  const Array cond = Array::from_vector(latent_shape, cond_values);

  std::ofstream trace;
  if (!opts.trace_path.empty()) {
    trace.open(opts.trace_path, std::ios::trunc);
    trace << "timestep,f0_norm\n";
  }

  std::vector<double> f0_hat(m), eps_hat(m);
  for (std::size_t step = 0; step < ts.size(); ++step) {
    const int t_cur = ts[step];
    const int t_next = step + 1 < ts.size() ? ts[step + 1] : 0;
    const double ab = s.alpha_bar_at(t_cur);
    const double sqrt_ab = std::sqrt(ab);
    const double sqrt_om = std::sqrt(1.0 - ab);

    Array pred = denoise(Array::from_vector(latent_shape, f), t_cur, cond);
    const auto& p = pred.values();

    if (target == PredTarget::Noise) {
      for (std::size_t i = 0; i < m; ++i) f0_hat[i] = (f[i] - sqrt_om * p[i]) / sqrt_ab;
    } else {
      std::copy(p.begin(), p.end(), f0_hat.begin());
    }
    if (opts.clip_x0) {
      for (auto& v : f0_hat) v = std::clamp(v, -opts.clip_bound, opts.clip_bound);
    }
    for (std::size_t i = 0; i < m; ++i) eps_hat[i] = (f[i] - sqrt_ab * f0_hat[i]) / sqrt_om;

    if (trace.is_open()) {
      double norm = 0.0;
      for (double v : f0_hat) norm += v * v;
      trace << t_cur << "," << std::sqrt(norm) << "\n";
    }

    if (opts.ancestral) {
      // Stochastic DDPM posterior step from t to t-1.
      const double beta = s.beta_at(t_cur);
      const double ab_prev = s.alpha_bar_at(t_cur - 1);
      const double mean_c0 = std::sqrt(ab_prev) * beta / (1.0 - ab);
      const double mean_c1 = std::sqrt(1.0 - beta) * (1.0 - ab_prev) / (1.0 - ab);
      const double sigma =
          t_cur > 1 ? std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab)) : 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        f[i] = mean_c0 * f0_hat[i] + mean_c1 * f[i] + sigma * (t_cur > 1 ? rng.normal() : 0.0);
      }
    } else {
      const double ab_next = s.alpha_bar_at(t_next);
      const double c0 = std::sqrt(ab_next);
      const double c1 = std::sqrt(1.0 - ab_next);
      for (std::size_t i = 0; i < m; ++i) f[i] = c0 * f0_hat[i] + c1 * eps_hat[i];
    }
  }
  return f;
}

}  // namespace voxsr::diffusion
