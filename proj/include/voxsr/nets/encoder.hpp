#pragma once

#include <string>

#include "voxsr/nets/layers.hpp"
#include "voxsr/voxel/grid.hpp"

namespace voxsr::nets {

struct EncoderConfig {
  voxel::VoxelGridSpec grid;
  int stats_channels = 4;  // occupancy + normalized xyz offsets per z slab
  int width = 64;
  int latent_channels = 64;
  int groups = 8;

  void check() const;
  int in_channels() const { return grid.dims[2] * stats_channels; }
  // Latent layout (d, h, w) with h = nx/4, w = ny/4.
  tensor::Shape latent_shape() const {
    return {latent_channels, grid.dims[0] / 4, grid.dims[1] / 4};
  }
};

/// Voxel feature encoder: rasterizes per-voxel statistics into a BEV image
/// with the z axis folded into channels, then applies strided 2D
/// convolutions down to (d, nx/4, ny/4). The output passes through tanh so
/// latents live in (-1, 1), a scale the diffusion process can treat as
/// unit-variance data.
class VoxelEncoder {
 public:
  VoxelEncoder(const EncoderConfig& cfg, const std::string& prefix, ParamStore& ps, Rng& rng);

  // (nz*stats, nx, ny) -> (d, nx/4, ny/4)
  Array forward(const Array& raster) const;
  // Convenience: rasterize + forward; throws on grid mismatch.
  Array encode(const voxel::VoxelizedCloud& vc) const;

  static std::vector<double> make_raster(const voxel::VoxelizedCloud& vc, int stats_channels);

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  Conv2dLayer conv_in_, down1_, down2_, proj_;
  GroupNormLayer gn_in_, gn1_, gn2_;
};

}  // namespace voxsr::nets
