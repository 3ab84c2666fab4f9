#include "voxsr/nets/decoder.hpp"

#include "voxsr/common/error.hpp"

namespace voxsr::nets {

void DecoderConfig::check() const {
  grid.check_valid();
  if (latent_channels % (grid.dims[2] / 4) != 0) {
    fail_arg("decoder: latent_channels ", latent_channels,
             " not divisible by nz/4 = ", grid.dims[2] / 4);
  }
  for (int w : widths) {
    if (w % groups != 0) fail_arg("decoder: width ", w, " not divisible by ", groups, " groups");
  }
}

ReconDecoder::ReconDecoder(const DecoderConfig& cfg, const std::string& prefix, ParamStore& ps,
                           Rng& rng)
    : cfg_(cfg) {
  cfg_.check();
  scale_grids_ = {cfg_.grid.coarsened(4), cfg_.grid.coarsened(2), cfg_.grid};

  const int c3 = cfg_.reproject_channels();
  const std::array<int, 3> in_ch = {c3, cfg_.widths[0], cfg_.widths[1]};
  for (int s = 0; s < 3; ++s) {
    auto& block = blocks_[static_cast<std::size_t>(s)];
    const int w = cfg_.widths[static_cast<std::size_t>(s)];
    const std::string base = prefix + ".scale" + std::to_string(s);
    if (s == 0) {
      // The re-projected volume is already at quarter resolution.
      block.up = make_convt3d(ps, base + ".up", in_ch[0], w, 3, 1, 1, rng);
    } else {
      block.up = make_convt3d(ps, base + ".up", in_ch[static_cast<std::size_t>(s)], w, 2, 2, 0,
                              rng);
    }
    block.gn_up = make_group_norm(ps, base + ".gn_up", w, cfg_.groups);
    block.conv = make_conv3d(ps, base + ".conv", w, w, 3, 1, 1, rng);
    block.gn_conv = make_group_norm(ps, base + ".gn_conv", w, cfg_.groups);
    block.mask_head = make_conv3d(ps, base + ".mask", w, 1, 1, 1, 0, rng);
    block.offset_head = make_conv3d(ps, base + ".offset", w, 3, 1, 1, 0, rng);
  }
}

std::array<ScalePrediction, 3> ReconDecoder::forward(const Array& latent) const {
  const tensor::Shape expect{cfg_.latent_channels, cfg_.grid.dims[0] / 4, cfg_.grid.dims[1] / 4};
  if (latent.shape() != expect) {
    fail_arg("decoder: latent shape ", tensor::shape_str(latent.shape()), ", expected ",
             tensor::shape_str(expect));
  }

  // (d, h, w) -> (c3, nz/4, h, w): fold the channel dim back into z.
  const int c3 = cfg_.reproject_channels();
  Array x = tensor::reshape(latent, {c3, cfg_.grid.dims[2] / 4, cfg_.grid.dims[0] / 4,
                                     cfg_.grid.dims[1] / 4});

  std::array<ScalePrediction, 3> out;
  for (int s = 0; s < 3; ++s) {
    const auto& block = blocks_[static_cast<std::size_t>(s)];
    const auto& grid = scale_grids_[static_cast<std::size_t>(s)];
    x = tensor::silu(block.gn_up(block.up(x)));
    x = tensor::silu(block.gn_conv(block.conv(x)));

    auto& pred = out[static_cast<std::size_t>(s)];
    pred.spec = grid;
    pred.mask_prob = tensor::reshape(tensor::sigmoid(block.mask_head(x)),
                                     {grid.dims[2], grid.dims[0], grid.dims[1]});
    const double l_length = grid.max_half_edge();
    pred.offset = tensor::add_scalar(
        tensor::scale(tensor::sigmoid(block.offset_head(x)), 2.0 * l_length), -l_length);
  }
  return out;
}

}  // namespace voxsr::nets
