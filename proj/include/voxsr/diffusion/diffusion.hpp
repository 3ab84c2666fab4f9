#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "voxsr/common/rng.hpp"
#include "voxsr/diffusion/schedule.hpp"
#include "voxsr/tensor/array.hpp"

namespace voxsr::diffusion {

enum class PredTarget { Noise, X0 };
enum class LossKind { L2, L1, Huber };

PredTarget pred_target_from_string(const std::string& s);
LossKind loss_kind_from_string(const std::string& s);
std::string to_string(PredTarget t);
std::string to_string(LossKind k);

/// Closed form of the forward corruption: sqrt(abar_t)*f0 + sqrt(1-abar_t)*eps.
std::vector<double> q_sample(const std::vector<double>& f0, int t,
                             const std::vector<double>& eps, const NoiseSchedule& s);

/// Monte-Carlo comparison of the step-by-step corruption kernel against the
/// closed form. Aggregate mean and variance statistics must land within
/// 3 sigma of their own Monte-Carlo error, with a loose 6-sigma bound on the
/// worst single element.
struct ChainCheckReport {
  int t = 0;
  std::int64_t samples = 0;
  double mean_z = 0.0;      // aggregate mean deviation in MC sigmas
  double var_z = 0.0;       // aggregate variance deviation in MC sigmas
  double worst_elem_z = 0.0;
  bool pass = false;
};
ChainCheckReport chain_equivalence_check(const std::vector<double>& f0, int t,
                                         const NoiseSchedule& s, std::int64_t n_samples,
                                         std::uint64_t seed);

/// A denoiser seen by the diffusion machinery: (f_t, t, c) -> prediction.
using DenoiseFn = std::function<tensor::Array(const tensor::Array&, int, const tensor::Array&)>;

/// Training objective: corrupt f0 with eps at step t and penalize the
/// network prediction against eps (Noise target) or f0 (X0 target) under
/// the chosen loss. Returns the scalar loss node of the built graph.
tensor::Array diffusion_loss(const std::vector<double>& f0, const tensor::Array& cond, int t,
                             const std::vector<double>& eps, const DenoiseFn& denoise,
                             const tensor::Shape& latent_shape, const NoiseSchedule& s,
                             PredTarget target, LossKind kind);

struct SampleOptions {
  bool clip_x0 = false;      // clamp the f0 estimate each step
  double clip_bound = 1.0;   // matches the tanh-bounded latent range
  bool ancestral = false;    // stochastic full-T posterior sampling
  std::string trace_path;    // optional per-step CSV (timestep, f0 norm)
};

/// Deterministic strided sampler (eta = 0). Starts from seeded unit Gaussian
/// noise shaped like the condition, visits `steps` evenly spaced descending
/// timesteps, converts each prediction to an f0 estimate and applies the
/// deterministic update toward the next timestep. With ancestral = true the
/// stochastic full-T posterior kernel is used instead (requires steps == T).
std::vector<double> sample(const DenoiseFn& denoise, const std::vector<double>& cond_values,
                           const tensor::Shape& latent_shape, int steps, const NoiseSchedule& s,
                           PredTarget target, std::uint64_t seed,
                           const SampleOptions& opts = {});

/// The evenly spaced descending timestep subsequence used by sample().
std::vector<int> sample_timesteps(int timesteps, int steps);

}  // namespace voxsr::diffusion
