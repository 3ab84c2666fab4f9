#pragma once

#include <array>
#include <string>

#include "voxsr/nets/layers.hpp"
#include "voxsr/voxel/grid.hpp"

namespace voxsr::nets {

struct DecoderConfig {
  voxel::VoxelGridSpec grid;
  int latent_channels = 64;
  std::array<int, 3> widths = {32, 16, 8};  // scales 1/4, 1/2, 1
  int groups = 4;

  void check() const;
  int reproject_channels() const { return latent_channels / (grid.dims[2] / 4); }
};

struct ScalePrediction {
  voxel::VoxelGridSpec spec;  // grid at this scale
  Array mask_prob;            // (nz, nx, ny), strictly inside (0,1)
  Array offset;               // (3, nz, nx, ny), meters
};

/// Latent-to-points decoder. The latent's channels are re-projected into a
/// 3D feature volume (c3, nz/4, nx/4, ny/4); each scale applies a transposed
/// conv3d upsampler and a conv3d block, then 1x1x1 heads emit an occupancy
/// probability (sigmoid) and a per-axis offset reparameterized as
/// (2*sigmoid(raw) - 1) * l_length with l_length half the largest voxel edge
/// at that scale.
class ReconDecoder {
 public:
  ReconDecoder(const DecoderConfig& cfg, const std::string& prefix, ParamStore& ps, Rng& rng);

  // latent: (d, nx/4, ny/4) -> predictions at scales 1/4, 1/2, 1
  std::array<ScalePrediction, 3> forward(const Array& latent) const;

  const DecoderConfig& config() const { return cfg_; }

 private:
  struct ScaleBlock {
    ConvT3dLayer up;
    GroupNormLayer gn_up, gn_conv;
    Conv3dLayer conv, mask_head, offset_head;
  };

  DecoderConfig cfg_;
  std::array<ScaleBlock, 3> blocks_;
  std::array<voxel::VoxelGridSpec, 3> scale_grids_;
};

}  // namespace voxsr::nets
