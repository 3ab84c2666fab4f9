// Direct convolution kernels. Loops are arranged so each output (or input,
// on the backward pass) element is accumulated by exactly one thread in a
// fixed order, which keeps results bitwise reproducible under OpenMP.

#include <memory>
#include <vector>

#include "voxsr/common/error.hpp"
#include "voxsr/tensor/array.hpp"

namespace voxsr::tensor {

namespace {

std::shared_ptr<Node> make_node(const char* op, Shape shape, std::vector<double> values,
                                std::vector<std::shared_ptr<Node>> parents) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->shape = std::move(shape);
  node->val = std::move(values);
  node->parents = std::move(parents);
  for (const auto& p : node->parents) {
    if (p->requires_grad) {
      node->requires_grad = true;
      break;
    }
  }
  return node;
}

int conv_out_dim(const char* op, int in, int k, int stride, int pad) {
  const int out = (in + 2 * pad - k) / stride + 1;
  if (in + 2 * pad < k || out < 1) {
    fail_arg(op, ": kernel ", k, " with stride ", stride, " pad ", pad,
             " does not fit input extent ", in);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- conv2d

Array conv2d(const Array& x, const Array& w, const Array& b, int stride, int pad) {
  if (x.shape().size() != 3 || w.shape().size() != 4 || b.shape().size() != 1 ||
      x.shape()[0] != w.shape()[1] || w.shape()[0] != b.shape()[0]) {
    fail_arg("conv2d: incompatible shapes x", shape_str(x.shape()), " w", shape_str(w.shape()),
             " b", shape_str(b.shape()));
  }
  if (stride < 1 || pad < 0) fail_arg("conv2d: bad stride/pad ", stride, "/", pad);
  const int ci = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  const int co = w.shape()[0], kh = w.shape()[2], kw = w.shape()[3];
  const int oh = conv_out_dim("conv2d", h, kh, stride, pad);
  const int ow = conv_out_dim("conv2d", wd, kw, stride, pad);

  std::vector<double> out(static_cast<std::size_t>(co) * oh * ow);
  const double* xv = x.values().data();
  const double* wv = w.values().data();
#pragma omp parallel for schedule(static)
  for (int o = 0; o < co; ++o) {
    double* oc = out.data() + static_cast<std::size_t>(o) * oh * ow;
    const double bias = b.values()[o];
    for (int i = 0; i < oh * ow; ++i) oc[i] = bias;
    for (int c = 0; c < ci; ++c) {
      const double* xc = xv + static_cast<std::size_t>(c) * h * wd;
      for (int r = 0; r < kh; ++r) {
        for (int s = 0; s < kw; ++s) {
          const double weight = wv[((static_cast<std::size_t>(o) * ci + c) * kh + r) * kw + s];
          for (int y = 0; y < oh; ++y) {
            const int iy = y * stride - pad + r;
            if (iy < 0 || iy >= h) continue;
            const double* xrow = xc + static_cast<std::size_t>(iy) * wd;
            double* orow = oc + static_cast<std::size_t>(y) * ow;
            for (int xo = 0; xo < ow; ++xo) {
              const int ix = xo * stride - pad + s;
              if (ix < 0 || ix >= wd) continue;
              orow[xo] += weight * xrow[ix];
            }
          }
        }
      }
    }
  }

  auto node = make_node("conv2d", {co, oh, ow}, std::move(out), {x.node(), w.node(), b.node()});
  Node* self = node.get();
  Node* px = x.node().get();
  Node* pw = w.node().get();
  Node* pb = b.node().get();
  if (node->requires_grad) {
    node->backprop = [self, px, pw, pb, ci, h, wd, co, kh, kw, oh, ow, stride, pad]() {
      const double* gy = self->grad.data();
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int o = 0; o < co; ++o) {
          double acc = 0.0;
          const double* gc = gy + static_cast<std::size_t>(o) * oh * ow;
          for (int i = 0; i < oh * ow; ++i) acc += gc[i];
          pb->grad[o] += acc;
        }
      }
      if (pw->requires_grad) {
        pw->ensure_grad();
#pragma omp parallel for schedule(static)
        for (int o = 0; o < co; ++o) {
          const double* gc = gy + static_cast<std::size_t>(o) * oh * ow;
          for (int c = 0; c < ci; ++c) {
            const double* xc = px->val.data() + static_cast<std::size_t>(c) * h * wd;
            for (int r = 0; r < kh; ++r) {
              for (int s = 0; s < kw; ++s) {
                double acc = 0.0;
                for (int y = 0; y < oh; ++y) {
                  const int iy = y * stride - pad + r;
                  if (iy < 0 || iy >= h) continue;
                  const double* xrow = xc + static_cast<std::size_t>(iy) * wd;
                  const double* grow = gc + static_cast<std::size_t>(y) * ow;
                  for (int xo = 0; xo < ow; ++xo) {
                    const int ix = xo * stride - pad + s;
                    if (ix < 0 || ix >= wd) continue;
                    acc += grow[xo] * xrow[ix];
                  }
                }
                pw->grad[((static_cast<std::size_t>(o) * ci + c) * kh + r) * kw + s] += acc;
              }
            }
          }
        }
      }
      if (px->requires_grad) {
        px->ensure_grad();
#pragma omp parallel for schedule(static)
        for (int c = 0; c < ci; ++c) {
          double* gx = px->grad.data() + static_cast<std::size_t>(c) * h * wd;
          for (int o = 0; o < co; ++o) {
            const double* gc = gy + static_cast<std::size_t>(o) * oh * ow;
            for (int r = 0; r < kh; ++r) {
              for (int s = 0; s < kw; ++s) {
                const double weight =
                    pw->val[((static_cast<std::size_t>(o) * ci + c) * kh + r) * kw + s];
                for (int y = 0; y < oh; ++y) {
                  const int iy = y * stride - pad + r;
                  if (iy < 0 || iy >= h) continue;
                  double* gxrow = gx + static_cast<std::size_t>(iy) * wd;
                  const double* grow = gc + static_cast<std::size_t>(y) * ow;
                  for (int xo = 0; xo < ow; ++xo) {
                    const int ix = xo * stride - pad + s;
                    if (ix < 0 || ix >= wd) continue;
                    gxrow[ix] += weight * grow[xo];
                  }
                }
              }
            }
          }
        }
      }
    };
  }
  return Array(std::move(node));
}

// ---------------------------------------------------------------- conv3d

Array conv3d(const Array& x, const Array& w, const Array& b, int stride, int pad) {
  if (x.shape().size() != 4 || w.shape().size() != 5 || b.shape().size() != 1 ||
      x.shape()[0] != w.shape()[1] || w.shape()[0] != b.shape()[0]) {
    fail_arg("conv3d: incompatible shapes x", shape_str(x.shape()), " w", shape_str(w.shape()),
             " b", shape_str(b.shape()));
  }
  if (stride < 1 || pad < 0) fail_arg("conv3d: bad stride/pad ", stride, "/", pad);
  const int ci = x.shape()[0], d = x.shape()[1], h = x.shape()[2], wd = x.shape()[3];
  const int co = w.shape()[0], kd = w.shape()[2], kh = w.shape()[3], kw = w.shape()[4];
  const int od = conv_out_dim("conv3d", d, kd, stride, pad);
  const int oh = conv_out_dim("conv3d", h, kh, stride, pad);
  const int ow = conv_out_dim("conv3d", wd, kw, stride, pad);

  const std::size_t in_plane = static_cast<std::size_t>(h) * wd;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  std::vector<double> out(static_cast<std::size_t>(co) * od * out_plane);
  const double* xv = x.values().data();
  const double* wv = w.values().data();
#pragma omp parallel for schedule(static)
  for (int o = 0; o < co; ++o) {
    double* oc = out.data() + static_cast<std::size_t>(o) * od * out_plane;
    const double bias = b.values()[o];
    for (std::size_t i = 0; i < static_cast<std::size_t>(od) * out_plane; ++i) oc[i] = bias;
    for (int c = 0; c < ci; ++c) {
      const double* xc = xv + static_cast<std::size_t>(c) * d * in_plane;
      for (int t = 0; t < kd; ++t) {
        for (int r = 0; r < kh; ++r) {
          for (int s = 0; s < kw; ++s) {
            const double weight =
                wv[(((static_cast<std::size_t>(o) * ci + c) * kd + t) * kh + r) * kw + s];
            for (int z = 0; z < od; ++z) {
              const int iz = z * stride - pad + t;
              if (iz < 0 || iz >= d) continue;
              for (int y = 0; y < oh; ++y) {
                const int iy = y * stride - pad + r;
                if (iy < 0 || iy >= h) continue;
                const double* xrow = xc + static_cast<std::size_t>(iz) * in_plane +
                                     static_cast<std::size_t>(iy) * wd;
                double* orow = oc + static_cast<std::size_t>(z) * out_plane +
                               static_cast<std::size_t>(y) * ow;
                for (int xo = 0; xo < ow; ++xo) {
                  const int ix = xo * stride - pad + s;
                  if (ix < 0 || ix >= wd) continue;
                  orow[xo] += weight * xrow[ix];
                }
              }
            }
          }
        }
      }
    }
  }

  auto node = make_node("conv3d", {co, od, oh, ow}, std::move(out),
                        {x.node(), w.node(), b.node()});
  Node* self = node.get();
  Node* px = x.node().get();
  Node* pw = w.node().get();
  Node* pb = b.node().get();
  if (node->requires_grad) {
    node->backprop = [self, px, pw, pb, ci, d, h, wd, co, kd, kh, kw, od, oh, ow, stride, pad,
                      in_plane, out_plane]() {
      const double* gy = self->grad.data();
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int o = 0; o < co; ++o) {
          double acc = 0.0;
          const double* gc = gy + static_cast<std::size_t>(o) * od * out_plane;
          for (std::size_t i = 0; i < static_cast<std::size_t>(od) * out_plane; ++i) acc += gc[i];
          pb->grad[o] += acc;
        }
      }
      if (pw->requires_grad) {
        pw->ensure_grad();
#pragma omp parallel for schedule(static)
        for (int o = 0; o < co; ++o) {
          const double* gc = gy + static_cast<std::size_t>(o) * od * out_plane;
          for (int c = 0; c < ci; ++c) {
            const double* xc = px->val.data() + static_cast<std::size_t>(c) * d * in_plane;
            for (int t = 0; t < kd; ++t) {
              for (int r = 0; r < kh; ++r) {
                for (int s = 0; s < kw; ++s) {
                  double acc = 0.0;
                  for (int z = 0; z < od; ++z) {
                    const int iz = z * stride - pad + t;
                    if (iz < 0 || iz >= d) continue;
                    for (int y = 0; y < oh; ++y) {
                      const int iy = y * stride - pad + r;
                      if (iy < 0 || iy >= h) continue;
                      const double* xrow = xc + static_cast<std::size_t>(iz) * in_plane +
                                           static_cast<std::size_t>(iy) * wd;
                      const double* grow = gc + static_cast<std::size_t>(z) * out_plane +
                                           static_cast<std::size_t>(y) * ow;
                      for (int xo = 0; xo < ow; ++xo) {
                        const int ix = xo * stride - pad + s;
                        if (ix < 0 || ix >= wd) continue;
                        acc += grow[xo] * xrow[ix];
                      }
                    }
                  }
                  pw->grad[(((static_cast<std::size_t>(o) * ci + c) * kd + t) * kh + r) * kw + s] +=
                      acc;
                }
              }
            }
          }
        }
      }
      if (px->requires_grad) {
        px->ensure_grad();
#pragma omp parallel for schedule(static)
        for (int c = 0; c < ci; ++c) {
          double* gx = px->grad.data() + static_cast<std::size_t>(c) * d * in_plane;
          for (int o = 0; o < co; ++o) {
            const double* gc = gy + static_cast<std::size_t>(o) * od * out_plane;
            for (int t = 0; t < kd; ++t) {
              for (int r = 0; r < kh; ++r) {
                for (int s = 0; s < kw; ++s) {
                  const double weight =
                      pw->val[(((static_cast<std::size_t>(o) * ci + c) * kd + t) * kh + r) * kw +
                              s];
                  for (int z = 0; z < od; ++z) {
                    const int iz = z * stride - pad + t;
                    if (iz < 0 || iz >= d) continue;
                    for (int y = 0; y < oh; ++y) {
                      const int iy = y * stride - pad + r;
                      if (iy < 0 || iy >= h) continue;
                      double* gxrow = gx + static_cast<std::size_t>(iz) * in_plane +
                                      static_cast<std::size_t>(iy) * wd;
                      const double* grow = gc + static_cast<std::size_t>(z) * out_plane +
                                           static_cast<std::size_t>(y) * ow;
                      for (int xo = 0; xo < ow; ++xo) {
                        const int ix = xo * stride - pad + s;
                        if (ix < 0 || ix >= wd) continue;
                        gxrow[ix] += weight * grow[xo];
                      }
                    }
                  }
                }
              }
            }
          }
        }
      }
    };
  }
  return Array(std::move(node));
}

// ------------------------------------------------------- conv_transpose3d

Array conv_transpose3d(const Array& x, const Array& w, const Array& b, int stride, int pad) {
  if (x.shape().size() != 4 || w.shape().size() != 5 || b.shape().size() != 1 ||
      x.shape()[0] != w.shape()[0] || w.shape()[1] != b.shape()[0]) {
    fail_arg("conv_transpose3d: incompatible shapes x", shape_str(x.shape()), " w",
             shape_str(w.shape()), " b", shape_str(b.shape()));
  }
  if (stride < 1 || pad < 0) fail_arg("conv_transpose3d: bad stride/pad ", stride, "/", pad);
  const int ci = x.shape()[0], d = x.shape()[1], h = x.shape()[2], wd = x.shape()[3];
  const int co = w.shape()[1], kd = w.shape()[2], kh = w.shape()[3], kw = w.shape()[4];
  const int od = (d - 1) * stride - 2 * pad + kd;
  const int oh = (h - 1) * stride - 2 * pad + kh;
  const int ow = (wd - 1) * stride - 2 * pad + kw;
  if (od < 1 || oh < 1 || ow < 1) {
    fail_arg("conv_transpose3d: output extent would be empty for input ", shape_str(x.shape()));
  }

  const std::size_t in_plane = static_cast<std::size_t>(h) * wd;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  std::vector<double> out(static_cast<std::size_t>(co) * od * out_plane);
  const double* xv = x.values().data();
  const double* wv = w.values().data();
#pragma omp parallel for schedule(static)
  for (int o = 0; o < co; ++o) {
    double* oc = out.data() + static_cast<std::size_t>(o) * od * out_plane;
    const double bias = b.values()[o];
    for (std::size_t i = 0; i < static_cast<std::size_t>(od) * out_plane; ++i) oc[i] = bias;
    for (int c = 0; c < ci; ++c) {
      const double* xc = xv + static_cast<std::size_t>(c) * d * in_plane;
      for (int t = 0; t < kd; ++t) {
        for (int r = 0; r < kh; ++r) {
          for (int s = 0; s < kw; ++s) {
            const double weight =
                wv[(((static_cast<std::size_t>(c) * co + o) * kd + t) * kh + r) * kw + s];
            for (int z = 0; z < d; ++z) {
              const int oz = z * stride - pad + t;
              if (oz < 0 || oz >= od) continue;
              for (int y = 0; y < h; ++y) {
                const int oy = y * stride - pad + r;
                if (oy < 0 || oy >= oh) continue;
                const double* xrow = xc + static_cast<std::size_t>(z) * in_plane +
                                     static_cast<std::size_t>(y) * wd;
                double* orow = oc + static_cast<std::size_t>(oz) * out_plane +
                               static_cast<std::size_t>(oy) * ow;
                for (int xi = 0; xi < wd; ++xi) {
                  const int ox = xi * stride - pad + s;
                  if (ox < 0 || ox >= ow) continue;
                  orow[ox] += weight * xrow[xi];
                }
              }
            }
          }
        }
      }
    }
  }

  auto node = make_node("conv_transpose3d", {co, od, oh, ow}, std::move(out),
                        {x.node(), w.node(), b.node()});
  Node* self = node.get();
  Node* px = x.node().get();
  Node* pw = w.node().get();
  Node* pb = b.node().get();
  if (node->requires_grad) {
    node->backprop = [self, px, pw, pb, ci, d, h, wd, co, kd, kh, kw, od, oh, ow, stride, pad,
                      in_plane, out_plane]() {
      const double* gy = self->grad.data();
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int o = 0; o < co; ++o) {
          double acc = 0.0;
          const double* gc = gy + static_cast<std::size_t>(o) * od * out_plane;
          for (std::size_t i = 0; i < static_cast<std::size_t>(od) * out_plane; ++i) acc += gc[i];
          pb->grad[o] += acc;
        }
      }
      if (pw->requires_grad) {
        pw->ensure_grad();
#pragma omp parallel for schedule(static)
        for (int c = 0; c < ci; ++c) {
          const double* xc = px->val.data() + static_cast<std::size_t>(c) * d * in_plane;
          for (int o = 0; o < co; ++o) {
            const double* gc = gy + static_cast<std::size_t>(o) * od * out_plane;
            for (int t = 0; t < kd; ++t) {
              for (int r = 0; r < kh; ++r) {
                for (int s = 0; s < kw; ++s) {
                  double acc = 0.0;
                  for (int z = 0; z < d; ++z) {
                    const int oz = z * stride - pad + t;
                    if (oz < 0 || oz >= od) continue;
                    for (int y = 0; y < h; ++y) {
                      const int oy = y * stride - pad + r;
                      if (oy < 0 || oy >= oh) continue;
                      const double* xrow = xc + static_cast<std::size_t>(z) * in_plane +
                                           static_cast<std::size_t>(y) * wd;
                      const double* grow = gc + static_cast<std::size_t>(oz) * out_plane +
                                           static_cast<std::size_t>(oy) * ow;
                      for (int xi = 0; xi < wd; ++xi) {
                        const int ox = xi * stride - pad + s;
                        if (ox < 0 || ox >= ow) continue;
                        acc += xrow[xi] * grow[ox];
                      }
                    }
                  }
                  pw->grad[(((static_cast<std::size_t>(c) * co + o) * kd + t) * kh + r) * kw + s] +=
                      acc;
                }
              }
            }
          }
        }
      }
      if (px->requires_grad) {
        px->ensure_grad();
#pragma omp parallel for schedule(static)
        for (int c = 0; c < ci; ++c) {
          double* gx = px->grad.data() + static_cast<std::size_t>(c) * d * in_plane;
          for (int o = 0; o < co; ++o) {
            const double* gc = gy + static_cast<std::size_t>(o) * od * out_plane;
            for (int t = 0; t < kd; ++t) {
              for (int r = 0; r < kh; ++r) {
                for (int s = 0; s < kw; ++s) {
                  const double weight =
                      pw->val[(((static_cast<std::size_t>(c) * co + o) * kd + t) * kh + r) * kw +
                              s];
                  for (int z = 0; z < d; ++z) {
                    const int oz = z * stride - pad + t;
                    if (oz < 0 || oz >= od) continue;
                    for (int y = 0; y < h; ++y) {
                      const int oy = y * stride - pad + r;
                      if (oy < 0 || oy >= oh) continue;
                      double* gxrow = gx + static_cast<std::size_t>(z) * in_plane +
                                      static_cast<std::size_t>(y) * wd;
                      const double* grow = gc + static_cast<std::size_t>(oz) * out_plane +
                                           static_cast<std::size_t>(oy) * ow;
                      for (int xi = 0; xi < wd; ++xi) {
                        const int ox = xi * stride - pad + s;
                        if (ox < 0 || ox >= ow) continue;
                        gxrow[xi] += weight * grow[ox];
                      }
                    }
                  }
                }
              }
            }
          }
        }
      }
    };
  }
  return Array(std::move(node));
}

// ------------------------------------------------------ upsample_nearest2d

Array upsample_nearest2d(const Array& x, int factor) {
  if (x.shape().size() != 3) fail_arg("upsample_nearest2d: expected (C,H,W), got ",
                                      shape_str(x.shape()));
  if (factor < 1) fail_arg("upsample_nearest2d: factor must be >= 1, got ", factor);
  const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const int oh = h * factor, ow = w * factor;
  std::vector<double> out(static_cast<std::size_t>(c) * oh * ow);
  for (int ch = 0; ch < c; ++ch) {
    const double* xc = x.values().data() + static_cast<std::size_t>(ch) * h * w;
    double* oc = out.data() + static_cast<std::size_t>(ch) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      const double* xrow = xc + static_cast<std::size_t>(y / factor) * w;
      double* orow = oc + static_cast<std::size_t>(y) * ow;
      for (int xo = 0; xo < ow; ++xo) orow[xo] = xrow[xo / factor];
    }
  }
  auto node = make_node("upsample_nearest2d", {c, oh, ow}, std::move(out), {x.node()});
  Node* self = node.get();
  Node* px = x.node().get();
  if (node->requires_grad) {
    node->backprop = [self, px, c, h, w, oh, ow, factor]() {
      if (!px->requires_grad) return;
      px->ensure_grad();
      for (int ch = 0; ch < c; ++ch) {
        double* gx = px->grad.data() + static_cast<std::size_t>(ch) * h * w;
        const double* gc = self->grad.data() + static_cast<std::size_t>(ch) * oh * ow;
        for (int y = 0; y < oh; ++y) {
          double* gxrow = gx + static_cast<std::size_t>(y / factor) * w;
          const double* grow = gc + static_cast<std::size_t>(y) * ow;
          for (int xo = 0; xo < ow; ++xo) gxrow[xo / factor] += grow[xo];
        }
      }
    };
  }
  return Array(std::move(node));
}

}  // namespace voxsr::tensor
