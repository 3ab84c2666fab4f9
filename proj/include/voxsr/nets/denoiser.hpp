#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "voxsr/nets/layers.hpp"

namespace voxsr::nets {

struct DenoiserConfig {
  int latent_channels = 64;
  std::array<int, 3> widths = {64, 128, 256};
  int blocks_per_level = 2;
  int time_dim = 128;
  int groups = 8;

  void check() const;
};

/// Conditional U-shaped denoiser over latent BEV features. The condition
/// enters only by channel concatenation at the input; a sinusoidal timestep
/// embedding feeds a two-layer perceptron per resolution level whose output
/// is added as a per-channel bias inside every residual block of that level.
/// The output head is zero-initialized.
class Denoiser {
 public:
  Denoiser(const DenoiserConfig& cfg, const std::string& prefix, ParamStore& ps, Rng& rng);

  // noisy, cond: (d, h, w) with identical shapes; t is the timestep index.
  Array forward(const Array& noisy, int t, const Array& cond) const;

  const DenoiserConfig& config() const { return cfg_; }

  static std::vector<double> timestep_embedding(double t, int dim);

 private:
  struct ResBlock {
    GroupNormLayer gn1, gn2;
    Conv2dLayer conv1, conv2;
    std::optional<Conv2dLayer> skip;  // 1x1 when channels change

    Array operator()(const Array& x, const Array& time_bias) const;
  };

  struct Level {
    LinearLayer time1, time2;
    std::vector<ResBlock> down_blocks;
    std::vector<ResBlock> up_blocks;  // empty on the bottom level
  };

  ResBlock make_block(const std::string& name, int cin, int cout, ParamStore& ps, Rng& rng);

  DenoiserConfig cfg_;
  Conv2dLayer stem_;
  std::vector<Level> levels_;
  std::vector<Conv2dLayer> downs_;  // level l -> l+1
  std::vector<Conv2dLayer> ups_;    // level l+1 -> l (after nearest upsample)
  GroupNormLayer gn_out_;
  Conv2dLayer conv_out_;
};

}  // namespace voxsr::nets
