#include "voxsr/nets/encoder.hpp"

#include "voxsr/common/error.hpp"

namespace voxsr::nets {

void EncoderConfig::check() const {
  grid.check_valid();
  if (stats_channels < 1) fail_arg("encoder: stats_channels must be >= 1");
  if (width % groups != 0) fail_arg("encoder: width ", width, " not divisible by ", groups,
                                    " groups");
  if (latent_channels < 1) fail_arg("encoder: latent_channels must be >= 1");
}

VoxelEncoder::VoxelEncoder(const EncoderConfig& cfg, const std::string& prefix, ParamStore& ps,
                           Rng& rng)
    : cfg_(cfg) {
  cfg_.check();
  conv_in_ = make_conv2d(ps, prefix + ".conv_in", cfg_.in_channels(), cfg_.width, 3, 1, 1, rng);
  gn_in_ = make_group_norm(ps, prefix + ".gn_in", cfg_.width, cfg_.groups);
  down1_ = make_conv2d(ps, prefix + ".down1", cfg_.width, cfg_.width, 3, 2, 1, rng);
  gn1_ = make_group_norm(ps, prefix + ".gn1", cfg_.width, cfg_.groups);
  down2_ = make_conv2d(ps, prefix + ".down2", cfg_.width, cfg_.width, 3, 2, 1, rng);
  gn2_ = make_group_norm(ps, prefix + ".gn2", cfg_.width, cfg_.groups);
  proj_ = make_conv2d(ps, prefix + ".proj", cfg_.width, cfg_.latent_channels, 1, 1, 0, rng);
}

Array VoxelEncoder::forward(const Array& raster) const {
  const tensor::Shape expect{cfg_.in_channels(), cfg_.grid.dims[0], cfg_.grid.dims[1]};
  if (raster.shape() != expect) {
    fail_arg("encoder: raster shape ", tensor::shape_str(raster.shape()), ", expected ",
             tensor::shape_str(expect));
  }
  Array x = tensor::silu(gn_in_(conv_in_(raster)));
  x = tensor::silu(gn1_(down1_(x)));
  x = tensor::silu(gn2_(down2_(x)));
  return tensor::tanh_op(proj_(x));
}

Array VoxelEncoder::encode(const voxel::VoxelizedCloud& vc) const {
  if (!(vc.spec == cfg_.grid)) fail_arg("encoder: grid mismatch between cloud and parameters");
  return forward(Array::from_vector({cfg_.in_channels(), cfg_.grid.dims[0], cfg_.grid.dims[1]},
                                    make_raster(vc, cfg_.stats_channels)));
}

std::vector<double> VoxelEncoder::make_raster(const voxel::VoxelizedCloud& vc,
                                              int stats_channels) {
  const auto& spec = vc.spec;
  const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
  const auto plane = static_cast<std::size_t>(nx) * ny;
  std::vector<double> raster(static_cast<std::size_t>(nz) * stats_channels * plane, 0.0);
  for (const auto& [linear, stats] : vc.cells) {
    const auto [ix, iy, iz] = spec.unravel(linear);
    const voxel::Vec3 off = stats.mean() - spec.voxel_center(ix, iy, iz);
    const std::size_t cell = static_cast<std::size_t>(ix) * ny + iy;
    const std::size_t base = static_cast<std::size_t>(iz) * stats_channels;
    raster[(base + 0) * plane + cell] = 1.0;
    for (int a = 0; a + 1 < stats_channels && a < 3; ++a) {
      raster[(base + 1 + a) * plane + cell] = off[a] / (0.5 * spec.edge[a]);
    }
  }
  return raster;
}

}  // namespace voxsr::nets
