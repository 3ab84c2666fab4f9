// Layer builders: each creates named parameters in a ParamStore and returns
// a small callable wrapper. Initialization is Kaiming-style normal scaled by
// init_gain (0 gives exact zero weights, used by the denoiser output head).

#pragma once

#include <cmath>
#include <string>

#include "voxsr/common/rng.hpp"
#include "voxsr/tensor/array.hpp"
#include "voxsr/tensor/checkpoint.hpp"

namespace voxsr::nets {

using tensor::Array;
using tensor::ParamStore;

inline std::vector<double> kaiming_init(Rng& rng, std::size_t n, std::size_t fan_in,
                                        double gain) {
  std::vector<double> out(n);
  const double std = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : out) v = rng.normal(0.0, std);
  return out;
}

struct Conv2dLayer {
  Array w, b;
  int stride = 1, pad = 0;
  Array operator()(const Array& x) const { return tensor::conv2d(x, w, b, stride, pad); }
};

inline Conv2dLayer make_conv2d(ParamStore& ps, const std::string& name, int cin, int cout, int k,
                               int stride, int pad, Rng& rng, double gain = 1.0) {
  Conv2dLayer layer;
  const auto n = static_cast<std::size_t>(cout) * cin * k * k;
  layer.w = ps.add(name + ".w",
                   Array::param({cout, cin, k, k},
                                kaiming_init(rng, n, static_cast<std::size_t>(cin) * k * k, gain)));
  layer.b = ps.add(name + ".b", Array::param({cout}, std::vector<double>(cout, 0.0)));
  layer.stride = stride;
  layer.pad = pad;
  return layer;
}

struct Conv3dLayer {
  Array w, b;
  int stride = 1, pad = 0;
  Array operator()(const Array& x) const { return tensor::conv3d(x, w, b, stride, pad); }
};

inline Conv3dLayer make_conv3d(ParamStore& ps, const std::string& name, int cin, int cout, int k,
                               int stride, int pad, Rng& rng, double gain = 1.0) {
  Conv3dLayer layer;
  const auto n = static_cast<std::size_t>(cout) * cin * k * k * k;
  layer.w = ps.add(
      name + ".w",
      Array::param({cout, cin, k, k, k},
                   kaiming_init(rng, n, static_cast<std::size_t>(cin) * k * k * k, gain)));
  layer.b = ps.add(name + ".b", Array::param({cout}, std::vector<double>(cout, 0.0)));
  layer.stride = stride;
  layer.pad = pad;
  return layer;
}

struct ConvT3dLayer {
  Array w, b;
  int stride = 1, pad = 0;
  Array operator()(const Array& x) const {
    return tensor::conv_transpose3d(x, w, b, stride, pad);
  }
};

inline ConvT3dLayer make_convt3d(ParamStore& ps, const std::string& name, int cin, int cout,
                                 int k, int stride, int pad, Rng& rng, double gain = 1.0) {
  ConvT3dLayer layer;
  const auto n = static_cast<std::size_t>(cin) * cout * k * k * k;
  layer.w = ps.add(
      name + ".w",
      Array::param({cin, cout, k, k, k},
                   kaiming_init(rng, n, static_cast<std::size_t>(cin) * k * k * k, gain)));
  layer.b = ps.add(name + ".b", Array::param({cout}, std::vector<double>(cout, 0.0)));
  layer.stride = stride;
  layer.pad = pad;
  return layer;
}

struct GroupNormLayer {
  Array gamma, beta;
  int groups = 8;
  Array operator()(const Array& x) const { return tensor::group_norm(x, groups, gamma, beta); }
};

inline GroupNormLayer make_group_norm(ParamStore& ps, const std::string& name, int channels,
                                      int groups) {
  GroupNormLayer layer;
  layer.gamma = ps.add(name + ".gamma", Array::param({channels}, std::vector<double>(channels, 1.0)));
  layer.beta = ps.add(name + ".beta", Array::param({channels}, std::vector<double>(channels, 0.0)));
  layer.groups = groups;
  return layer;
}

struct LinearLayer {
  Array w, b;
  Array operator()(const Array& x) const { return tensor::linear(x, w, b); }
};

inline LinearLayer make_linear(ParamStore& ps, const std::string& name, int in, int out, Rng& rng,
                               double gain = 1.0) {
  LinearLayer layer;
  layer.w = ps.add(name + ".w",
                   Array::param({out, in}, kaiming_init(rng, static_cast<std::size_t>(out) * in,
                                                        static_cast<std::size_t>(in), gain)));
  layer.b = ps.add(name + ".b", Array::param({out}, std::vector<double>(out, 0.0)));
  return layer;
}

}  // namespace voxsr::nets
