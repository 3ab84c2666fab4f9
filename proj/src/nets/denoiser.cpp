#include "voxsr/nets/denoiser.hpp"

#include <cmath>

#include "voxsr/common/error.hpp"

namespace voxsr::nets {

void DenoiserConfig::check() const {
  if (latent_channels < 1) fail_arg("denoiser: latent_channels must be >= 1");
  if (blocks_per_level < 1) fail_arg("denoiser: blocks_per_level must be >= 1");
  if (time_dim < 4 || time_dim % 2 != 0) fail_arg("denoiser: time_dim must be even and >= 4");
  for (int w : widths) {
    if (w % groups != 0) fail_arg("denoiser: width ", w, " not divisible by ", groups, " groups");
  }
}

std::vector<double> Denoiser::timestep_embedding(double t, int dim) {
  const int half = dim / 2;
  std::vector<double> emb(static_cast<std::size_t>(dim));
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                 static_cast<double>(half - 1));
    emb[static_cast<std::size_t>(i)] = std::sin(t * freq);
    emb[static_cast<std::size_t>(half + i)] = std::cos(t * freq);
  }
  return emb;
}

Denoiser::ResBlock Denoiser::make_block(const std::string& name, int cin, int cout,
                                        ParamStore& ps, Rng& rng) {
  ResBlock block;
  block.gn1 = make_group_norm(ps, name + ".gn1", cin, cfg_.groups);
  block.conv1 = make_conv2d(ps, name + ".conv1", cin, cout, 3, 1, 1, rng);
  block.gn2 = make_group_norm(ps, name + ".gn2", cout, cfg_.groups);
  block.conv2 = make_conv2d(ps, name + ".conv2", cout, cout, 3, 1, 1, rng);
  if (cin != cout) block.skip = make_conv2d(ps, name + ".skip", cin, cout, 1, 1, 0, rng);
  return block;
}

Array Denoiser::ResBlock::operator()(const Array& x, const Array& time_bias) const {
  Array h = conv1(tensor::silu(gn1(x)));
  h = tensor::add_channel_bias(h, time_bias);
  h = conv2(tensor::silu(gn2(h)));
  return tensor::add(h, skip ? (*skip)(x) : x);
}

Denoiser::Denoiser(const DenoiserConfig& cfg, const std::string& prefix, ParamStore& ps, Rng& rng)
    : cfg_(cfg) {
  cfg_.check();
  const int levels = static_cast<int>(cfg_.widths.size());
  stem_ = make_conv2d(ps, prefix + ".stem", 2 * cfg_.latent_channels, cfg_.widths[0], 3, 1, 1,
                      rng);

  levels_.resize(static_cast<std::size_t>(levels));
  for (int l = 0; l < levels; ++l) {
    auto& level = levels_[static_cast<std::size_t>(l)];
    const int w = cfg_.widths[static_cast<std::size_t>(l)];
    const std::string base = prefix + ".level" + std::to_string(l);
    level.time1 = make_linear(ps, base + ".time1", cfg_.time_dim, w, rng);
    level.time2 = make_linear(ps, base + ".time2", w, w, rng);
    for (int b = 0; b < cfg_.blocks_per_level; ++b) {
      level.down_blocks.push_back(
          make_block(base + ".down" + std::to_string(b), w, w, ps, rng));
    }
    if (l + 1 < levels) {
      downs_.push_back(make_conv2d(ps, base + ".downsample", w,
                                   cfg_.widths[static_cast<std::size_t>(l + 1)], 3, 2, 1, rng));
    }
  }
  // Decoder half, top-down order is levels-2 .. 0.
  for (int l = levels - 2; l >= 0; --l) {
    auto& level = levels_[static_cast<std::size_t>(l)];
    const int w = cfg_.widths[static_cast<std::size_t>(l)];
    const std::string base = prefix + ".level" + std::to_string(l);
    ups_.push_back(make_conv2d(ps, base + ".upsample",
                               cfg_.widths[static_cast<std::size_t>(l + 1)], w, 3, 1, 1, rng));
    for (int b = 0; b < cfg_.blocks_per_level; ++b) {
      const int cin = b == 0 ? 2 * w : w;  // first block consumes the skip concat
      level.up_blocks.push_back(make_block(base + ".up" + std::to_string(b), cin, w, ps, rng));
    }
  }
  gn_out_ = make_group_norm(ps, prefix + ".gn_out", cfg_.widths[0], cfg_.groups);
  conv_out_ = make_conv2d(ps, prefix + ".conv_out", cfg_.widths[0], cfg_.latent_channels, 3, 1, 1,
                          rng, 0.0);  // zero-initialized head
}

Array Denoiser::forward(const Array& noisy, int t, const Array& cond) const {
  if (noisy.shape() != cond.shape()) {
    fail_arg("denoiser: noisy shape ", tensor::shape_str(noisy.shape()),
             " does not match condition shape ", tensor::shape_str(cond.shape()));
  }
  if (noisy.shape().size() != 3 || noisy.shape()[0] != cfg_.latent_channels) {
    fail_arg("denoiser: expected (", cfg_.latent_channels, ",h,w) input, got ",
             tensor::shape_str(noisy.shape()));
  }

  const Array t_emb = Array::from_vector(
      {cfg_.time_dim}, timestep_embedding(static_cast<double>(t), cfg_.time_dim));
  const int levels = static_cast<int>(cfg_.widths.size());
  std::vector<Array> time_bias(static_cast<std::size_t>(levels));
  for (int l = 0; l < levels; ++l) {
    const auto& level = levels_[static_cast<std::size_t>(l)];
    time_bias[static_cast<std::size_t>(l)] =
        level.time2(tensor::silu(level.time1(t_emb)));
  }

  Array x = stem_(tensor::concat({noisy, cond}, 0));
  std::vector<Array> skips;
  for (int l = 0; l < levels; ++l) {
    const auto& level = levels_[static_cast<std::size_t>(l)];
    for (const auto& block : level.down_blocks) {
      x = block(x, time_bias[static_cast<std::size_t>(l)]);
    }
    if (l + 1 < levels) {
      skips.push_back(x);
      x = downs_[static_cast<std::size_t>(l)](x);
    }
  }
  for (int l = levels - 2; l >= 0; --l) {
    const auto& level = levels_[static_cast<std::size_t>(l)];
    x = ups_[static_cast<std::size_t>(levels - 2 - l)](tensor::upsample_nearest2d(x, 2));
    x = tensor::concat({x, skips[static_cast<std::size_t>(l)]}, 0);
    for (const auto& block : level.up_blocks) {
      x = block(x, time_bias[static_cast<std::size_t>(l)]);
    }
  }
  return conv_out_(tensor::silu(gn_out_(x)));
}

}  // namespace voxsr::nets
