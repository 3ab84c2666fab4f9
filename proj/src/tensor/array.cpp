#include "voxsr/tensor/array.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "voxsr/common/error.hpp"

namespace voxsr::tensor {

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

namespace {

void check_shape_positive(const char* op, const Shape& shape) {
  for (int d : shape) {
    if (d <= 0) fail_arg(op, ": non-positive dimension in shape ", shape_str(shape));
  }
}

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

void require_same_shape(const char* op, const Array& a, const Array& b) {
  if (a.shape() != b.shape()) {
    fail_arg(op, ": shape mismatch ", shape_str(a.shape()), " vs ", shape_str(b.shape()));
  }
}

}  // namespace

Array Array::constant(Shape shape, double fill) {
  check_shape_positive("constant", shape);
  const auto n = static_cast<std::size_t>(numel(shape));
  auto node = make_node("leaf", std::move(shape), std::vector<double>(n, fill), {});
  return Array(std::move(node));
}

Array Array::from_vector(Shape shape, std::vector<double> values, bool requires_grad) {
  check_shape_positive("from_vector", shape);
  if (static_cast<std::int64_t>(values.size()) != numel(shape)) {
    fail_arg("from_vector: ", values.size(), " values for shape ", shape_str(shape));
  }
  auto node = make_node("leaf", std::move(shape), std::move(values), {});
  node->requires_grad = requires_grad;
  return Array(std::move(node));
}

Array Array::param(Shape shape, std::vector<double> values) {
  return from_vector(std::move(shape), std::move(values), true);
}

const std::vector<double>& Array::grad() const {
  if (node_->grad.empty()) fail("array: gradient not populated (op '", node_->op, "')");
  return node_->grad;
}

double Array::scalar() const {
  if (size() != 1) fail("array: scalar() on shape ", shape_str(shape()));
  return node_->val[0];
}

void backward(const Array& root) {
  Node* r = root.node().get();
  if (!r) fail("backward: empty array");
  if (r->val.size() != 1) fail("backward: non-scalar output of shape ", shape_str(r->shape));
  if (r->backward_done) fail("backward: called twice on the same graph without reset");
  r->backward_done = true;
  if (!r->requires_grad) return;

  // Iterative post-order DFS; only nodes that require grad can move gradient.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(r, 0);
  visited.insert(r);
  while (!stack.empty()) {
    auto& [node, next_parent] = stack.back();
    if (next_parent < node->parents.size()) {
      Node* p = node->parents[next_parent].get();
      ++next_parent;
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  r->ensure_grad();
  r->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backprop && !node->grad.empty()) node->backprop();
  }
}

// ---- elementwise ----

namespace {

template <typename Fwd, typename Bwd>
Array unary_op(const char* name, const Array& a, Fwd fwd, Bwd bwd) {
  const auto n = a.values().size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(a.values()[i]);
  auto node = make_node(name, a.shape(), std::move(out), {a.node()});
  Node* self = node.get();
  Node* pa = a.node().get();
  if (node->requires_grad) {
    node->backprop = [self, pa, bwd]() {
      if (!pa->requires_grad) return;
      pa->ensure_grad();
      const auto n = self->val.size();
      for (std::size_t i = 0; i < n; ++i) {
        pa->grad[i] += self->grad[i] * bwd(pa->val[i], self->val[i]);
      }
    };
  }
  return Array(std::move(node));
}

}  // namespace

Array add(const Array& a, const Array& b) {
  require_same_shape("add", a, b);
  const auto n = a.values().size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.values()[i] + b.values()[i];
  auto node = make_node("add", a.shape(), std::move(out), {a.node(), b.node()});
  Node* self = node.get();
  Node* pa = a.node().get();
  Node* pb = b.node().get();
  if (node->requires_grad) {
    node->backprop = [self, pa, pb]() {
      const auto n = self->val.size();
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) pa->grad[i] += self->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) pb->grad[i] += self->grad[i];
      }
    };
  }
  return Array(std::move(node));
}

Array sub(const Array& a, const Array& b) {
  require_same_shape("sub", a, b);
  const auto n = a.values().size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.values()[i] - b.values()[i];
  auto node = make_node("sub", a.shape(), std::move(out), {a.node(), b.node()});
  Node* self = node.get();
  Node* pa = a.node().get();
  Node* pb = b.node().get();
  if (node->requires_grad) {
    node->backprop = [self, pa, pb]() {
      const auto n = self->val.size();
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) pa->grad[i] += self->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) pb->grad[i] -= self->grad[i];
      }
    };
  }
  return Array(std::move(node));
}

Array mul(const Array& a, const Array& b) {
  require_same_shape("mul", a, b);
  const auto n = a.values().size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.values()[i] * b.values()[i];
  auto node = make_node("mul", a.shape(), std::move(out), {a.node(), b.node()});
  Node* self = node.get();
  Node* pa = a.node().get();
  Node* pb = b.node().get();
  if (node->requires_grad) {
    node->backprop = [self, pa, pb]() {
      const auto n = self->val.size();
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) pa->grad[i] += self->grad[i] * pb->val[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) pb->grad[i] += self->grad[i] * pa->val[i];
      }
    };
  }
  return Array(std::move(node));
}

Array scale(const Array& a, double s) {
  return unary_op("scale", a, [s](double x) { return s * x; },
                  [s](double, double) { return s; });
}

Array add_scalar(const Array& a, double c) {
  return unary_op("add_scalar", a, [c](double x) { return x + c; },
                  [](double, double) { return 1.0; });
}

Array sigmoid(const Array& a) {
  return unary_op("sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Array silu(const Array& a) {
  return unary_op("silu", a,
                  [](double x) { return x / (1.0 + std::exp(-x)); },
                  [](double x, double) {
                    const double s = 1.0 / (1.0 + std::exp(-x));
                    return s * (1.0 + x * (1.0 - s));
                  });
}

Array tanh_op(const Array& a) {
  return unary_op("tanh", a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Array add_channel_bias(const Array& x, const Array& bias) {
  if (bias.shape().size() != 1 || x.shape().empty() || x.shape()[0] != bias.shape()[0]) {
    fail_arg("add_channel_bias: shape mismatch ", shape_str(x.shape()), " vs ",
             shape_str(bias.shape()));
  }
  const auto channels = static_cast<std::size_t>(x.shape()[0]);
  const auto spatial = x.values().size() / channels;
  std::vector<double> out(x.values().size());
  for (std::size_t c = 0; c < channels; ++c) {
    const double bv = bias.values()[c];
    for (std::size_t i = 0; i < spatial; ++i) out[c * spatial + i] = x.values()[c * spatial + i] + bv;
  }
  auto node = make_node("add_channel_bias", x.shape(), std::move(out), {x.node(), bias.node()});
  Node* self = node.get();
  Node* px = x.node().get();
  Node* pb = bias.node().get();
  if (node->requires_grad) {
    node->backprop = [self, px, pb, channels, spatial]() {
      if (px->requires_grad) {
        px->ensure_grad();
        const auto n = self->val.size();
        for (std::size_t i = 0; i < n; ++i) px->grad[i] += self->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t c = 0; c < channels; ++c) {
          double acc = 0.0;
          for (std::size_t i = 0; i < spatial; ++i) acc += self->grad[c * spatial + i];
          pb->grad[c] += acc;
        }
      }
    };
  }
  return Array(std::move(node));
}

// ---- structural ----

Array concat(const std::vector<Array>& parts, int axis) {
  if (parts.empty()) fail_arg("concat: no inputs");
  const auto& base = parts[0].shape();
  const int rank = static_cast<int>(base.size());
  if (axis < 0 || axis >= rank) fail_arg("concat: axis ", axis, " out of range for rank ", rank);
  Shape out_shape = base;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    if (static_cast<int>(p.shape().size()) != rank) {
      fail_arg("concat: rank mismatch ", shape_str(p.shape()), " vs ", shape_str(base));
    }
    for (int d = 0; d < rank; ++d) {
      if (d != axis && p.shape()[d] != base[d]) {
        fail_arg("concat: shape mismatch ", shape_str(p.shape()), " vs ", shape_str(base),
                 " on axis ", d);
      }
    }
    out_shape[axis] += p.shape()[axis];
  }

  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= base[d];
  for (int d = axis + 1; d < rank; ++d) inner *= base[d];

  std::vector<double> out(static_cast<std::size_t>(numel(out_shape)));
  const std::int64_t out_row = static_cast<std::int64_t>(out_shape[axis]) * inner;
  std::int64_t offset = 0;
  for (const auto& p : parts) {
    const std::int64_t row = static_cast<std::int64_t>(p.shape()[axis]) * inner;
    for (std::int64_t o = 0; o < outer; ++o) {
      std::copy_n(p.values().data() + o * row, row, out.data() + o * out_row + offset);
    }
    offset += row;
  }

  std::vector<std::shared_ptr<Node>> parent_nodes;
  for (const auto& p : parts) parent_nodes.push_back(p.node());
  auto node = make_node("concat", out_shape, std::move(out), std::move(parent_nodes));
  Node* self = node.get();
  if (node->requires_grad) {
    node->backprop = [self, outer, inner, out_row]() {
      std::int64_t offset = 0;
      for (auto& parent : self->parents) {
        Node* p = parent.get();
        const std::int64_t axis_len = static_cast<std::int64_t>(p->val.size()) / (outer * inner);
        const std::int64_t row = axis_len * inner;
        if (p->requires_grad) {
          p->ensure_grad();
          for (std::int64_t o = 0; o < outer; ++o) {
            const double* src = self->grad.data() + o * out_row + offset;
            double* dst = p->grad.data() + o * row;
            for (std::int64_t i = 0; i < row; ++i) dst[i] += src[i];
          }
        }
        offset += row;
      }
    };
  }
  return Array(std::move(node));
}

Array reshape(const Array& a, Shape shape) {
  check_shape_positive("reshape", shape);
  if (numel(shape) != numel(a.shape())) {
    fail_arg("reshape: cannot view ", shape_str(a.shape()), " as ", shape_str(shape));
  }
  auto node = make_node("reshape", std::move(shape), a.values(), {a.node()});
  Node* self = node.get();
  Node* pa = a.node().get();
  if (node->requires_grad) {
    node->backprop = [self, pa]() {
      if (!pa->requires_grad) return;
      pa->ensure_grad();
      const auto n = self->val.size();
      for (std::size_t i = 0; i < n; ++i) pa->grad[i] += self->grad[i];
    };
  }
  return Array(std::move(node));
}

Array slice(const Array& a, const std::vector<int>& start, const std::vector<int>& stop) {
  const auto& in_shape = a.shape();
  const int rank = static_cast<int>(in_shape.size());
  if (static_cast<int>(start.size()) != rank || static_cast<int>(stop.size()) != rank) {
    fail_arg("slice: start/stop rank mismatch for shape ", shape_str(in_shape));
  }
  Shape out_shape(rank);
  for (int d = 0; d < rank; ++d) {
    if (start[d] < 0 || stop[d] > in_shape[d] || start[d] >= stop[d]) {
      fail_arg("slice: bad range [", start[d], ",", stop[d], ") on axis ", d, " of shape ",
               shape_str(in_shape));
    }
    out_shape[d] = stop[d] - start[d];
  }

  std::vector<std::int64_t> in_strides(rank, 1);
  for (int d = rank - 2; d >= 0; --d) in_strides[d] = in_strides[d + 1] * in_shape[d + 1];

  const auto total = static_cast<std::size_t>(numel(out_shape));
  std::vector<double> out(total);
  std::vector<int> idx(rank, 0);
  for (std::size_t linear = 0; linear < total; ++linear) {
    std::int64_t src = 0;
    for (int d = 0; d < rank; ++d) src += (start[d] + idx[d]) * in_strides[d];
    out[linear] = a.values()[static_cast<std::size_t>(src)];
    for (int d = rank - 1; d >= 0; --d) {
      if (++idx[d] < out_shape[d]) break;
      idx[d] = 0;
    }
  }

  auto node = make_node("slice", out_shape, std::move(out), {a.node()});
  Node* self = node.get();
  Node* pa = a.node().get();
  if (node->requires_grad) {
    const auto starts = start;
    node->backprop = [self, pa, starts, in_strides]() {
      if (!pa->requires_grad) return;
      pa->ensure_grad();
      const int rank = static_cast<int>(self->shape.size());
      std::vector<int> idx(rank, 0);
      const auto total = self->val.size();
      for (std::size_t linear = 0; linear < total; ++linear) {
        std::int64_t src = 0;
        for (int d = 0; d < rank; ++d) src += (starts[d] + idx[d]) * in_strides[d];
        pa->grad[static_cast<std::size_t>(src)] += self->grad[linear];
        for (int d = rank - 1; d >= 0; --d) {
          if (++idx[d] < self->shape[d]) break;
          idx[d] = 0;
        }
      }
    };
  }
  return Array(std::move(node));
}

// ---- linear algebra ----

Array matmul(const Array& a, const Array& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
    fail_arg("matmul: incompatible shapes ", shape_str(a.shape()), " x ", shape_str(b.shape()));
  }
  const int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int l = 0; l < k; ++l) {
      const double av = a.values()[static_cast<std::size_t>(i) * k + l];
      const double* brow = b.values().data() + static_cast<std::size_t>(l) * n;
      double* orow = out.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  auto node = make_node("matmul", {m, n}, std::move(out), {a.node(), b.node()});
  Node* self = node.get();
  Node* pa = a.node().get();
  Node* pb = b.node().get();
  if (node->requires_grad) {
    node->backprop = [self, pa, pb, m, k, n]() {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (int i = 0; i < m; ++i) {
          for (int l = 0; l < k; ++l) {
            double acc = 0.0;
            const double* grow = self->grad.data() + static_cast<std::size_t>(i) * n;
            const double* brow = pb->val.data() + static_cast<std::size_t>(l) * n;
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            pa->grad[static_cast<std::size_t>(i) * k + l] += acc;
          }
        }
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int l = 0; l < k; ++l) {
          for (int i = 0; i < m; ++i) {
            const double av = pa->val[static_cast<std::size_t>(i) * k + l];
            const double* grow = self->grad.data() + static_cast<std::size_t>(i) * n;
            double* brow = pb->grad.data() + static_cast<std::size_t>(l) * n;
            for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
          }
        }
      }
    };
  }
  return Array(std::move(node));
}

Array linear(const Array& x, const Array& w, const Array& b) {
  if (x.shape().size() != 1 || w.shape().size() != 2 || b.shape().size() != 1 ||
      w.shape()[1] != x.shape()[0] || w.shape()[0] != b.shape()[0]) {
    fail_arg("linear: incompatible shapes x", shape_str(x.shape()), " w", shape_str(w.shape()),
             " b", shape_str(b.shape()));
  }
  const int out_dim = w.shape()[0], in_dim = w.shape()[1];
  std::vector<double> out(static_cast<std::size_t>(out_dim));
  for (int o = 0; o < out_dim; ++o) {
    double acc = b.values()[o];
    const double* wrow = w.values().data() + static_cast<std::size_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) acc += wrow[i] * x.values()[i];
    out[o] = acc;
  }
  auto node = make_node("linear", {out_dim}, std::move(out), {x.node(), w.node(), b.node()});
  Node* self = node.get();
  Node* px = x.node().get();
  Node* pw = w.node().get();
  Node* pb = b.node().get();
  if (node->requires_grad) {
    node->backprop = [self, px, pw, pb, out_dim, in_dim]() {
      if (px->requires_grad) {
        px->ensure_grad();
        for (int o = 0; o < out_dim; ++o) {
          const double g = self->grad[o];
          const double* wrow = pw->val.data() + static_cast<std::size_t>(o) * in_dim;
          for (int i = 0; i < in_dim; ++i) px->grad[i] += g * wrow[i];
        }
      }
      if (pw->requires_grad) {
        pw->ensure_grad();
        for (int o = 0; o < out_dim; ++o) {
          const double g = self->grad[o];
          double* wrow = pw->grad.data() + static_cast<std::size_t>(o) * in_dim;
          for (int i = 0; i < in_dim; ++i) wrow[i] += g * px->val[i];
        }
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int o = 0; o < out_dim; ++o) pb->grad[o] += self->grad[o];
      }
    };
  }
  return Array(std::move(node));
}

// ---- group normalization ----

Array group_norm(const Array& x, int groups, const Array& gamma, const Array& beta, double eps) {
  if (x.shape().empty()) fail_arg("group_norm: scalar input");
  const int channels = x.shape()[0];
  if (groups < 1 || channels % groups != 0) {
    fail_arg("group_norm: ", channels, " channels not divisible by ", groups, " groups");
  }
  if (gamma.shape() != Shape{channels} || beta.shape() != Shape{channels}) {
    fail_arg("group_norm: gamma/beta must have shape (", channels, ")");
  }
  const auto spatial = x.values().size() / static_cast<std::size_t>(channels);
  const int ch_per_group = channels / groups;
  const auto group_size = static_cast<std::size_t>(ch_per_group) * spatial;

  std::vector<double> xhat(x.values().size());
  std::vector<double> inv_std(static_cast<std::size_t>(groups));
  std::vector<double> out(x.values().size());
  for (int g = 0; g < groups; ++g) {
    const double* const xg = x.values().data() + static_cast<std::size_t>(g) * group_size;
    double mean = 0.0;
    for (std::size_t i = 0; i < group_size; ++i) mean += xg[i];
    mean /= static_cast<double>(group_size);
    double var = 0.0;
    for (std::size_t i = 0; i < group_size; ++i) {
      const double d = xg[i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(group_size);
    const double istd = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(g)] = istd;
    double* const hg = xhat.data() + static_cast<std::size_t>(g) * group_size;
    for (std::size_t i = 0; i < group_size; ++i) hg[i] = (xg[i] - mean) * istd;
  }
  for (int c = 0; c < channels; ++c) {
    const double gam = gamma.values()[c];
    const double bet = beta.values()[c];
    const double* hc = xhat.data() + static_cast<std::size_t>(c) * spatial;
    double* oc = out.data() + static_cast<std::size_t>(c) * spatial;
    for (std::size_t i = 0; i < spatial; ++i) oc[i] = gam * hc[i] + bet;
  }

  auto node = make_node("group_norm", x.shape(), std::move(out),
                        {x.node(), gamma.node(), beta.node()});
  Node* self = node.get();
  Node* px = x.node().get();
  Node* pg = gamma.node().get();
  Node* pb = beta.node().get();
  if (node->requires_grad) {
    node->backprop = [self, px, pg, pb, xhat = std::move(xhat), inv_std = std::move(inv_std),
                      groups, ch_per_group, spatial, group_size]() {
      const int channels = groups * ch_per_group;
      if (pg->requires_grad) {
        pg->ensure_grad();
        for (int c = 0; c < channels; ++c) {
          double acc = 0.0;
          const double* gc = self->grad.data() + static_cast<std::size_t>(c) * spatial;
          const double* hc = xhat.data() + static_cast<std::size_t>(c) * spatial;
          for (std::size_t i = 0; i < spatial; ++i) acc += gc[i] * hc[i];
          pg->grad[c] += acc;
        }
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int c = 0; c < channels; ++c) {
          double acc = 0.0;
          const double* gc = self->grad.data() + static_cast<std::size_t>(c) * spatial;
          for (std::size_t i = 0; i < spatial; ++i) acc += gc[i];
          pb->grad[c] += acc;
        }
      }
      if (px->requires_grad) {
        px->ensure_grad();
        // dL/dx = istd * (h - mean(h) - xhat * mean(h*xhat)), h = dy*gamma.
        std::vector<double> h(group_size);
        for (int g = 0; g < groups; ++g) {
          const std::size_t base = static_cast<std::size_t>(g) * group_size;
          double mean_h = 0.0, mean_hx = 0.0;
          for (int cc = 0; cc < ch_per_group; ++cc) {
            const int c = g * ch_per_group + cc;
            const double gam = pg->val[c];
            const double* gc = self->grad.data() + static_cast<std::size_t>(c) * spatial;
            const double* hc = xhat.data() + static_cast<std::size_t>(c) * spatial;
            double* hv = h.data() + static_cast<std::size_t>(cc) * spatial;
            for (std::size_t i = 0; i < spatial; ++i) {
              hv[i] = gc[i] * gam;
              mean_h += hv[i];
              mean_hx += hv[i] * hc[i];
            }
          }
          mean_h /= static_cast<double>(group_size);
          mean_hx /= static_cast<double>(group_size);
          const double istd = inv_std[static_cast<std::size_t>(g)];
          for (std::size_t i = 0; i < group_size; ++i) {
            px->grad[base + i] += istd * (h[i] - mean_h - xhat[base + i] * mean_hx);
          }
        }
      }
    };
  }
  return Array(std::move(node));
}

// ---- reductions and losses ----

Array sum(const Array& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  auto node = make_node("sum", {1}, {acc}, {a.node()});
  Node* self = node.get();
  Node* pa = a.node().get();
  if (node->requires_grad) {
    node->backprop = [self, pa]() {
      if (!pa->requires_grad) return;
      pa->ensure_grad();
      const double g = self->grad[0];
      for (auto& v : pa->grad) v += g;
    };
  }
  return Array(std::move(node));
}

Array mean(const Array& a) {
  const double inv_n = 1.0 / static_cast<double>(a.values().size());
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  auto node = make_node("mean", {1}, {acc * inv_n}, {a.node()});
  Node* self = node.get();
  Node* pa = a.node().get();
  if (node->requires_grad) {
    node->backprop = [self, pa, inv_n]() {
      if (!pa->requires_grad) return;
      pa->ensure_grad();
      const double g = self->grad[0] * inv_n;
      for (auto& v : pa->grad) v += g;
    };
  }
  return Array(std::move(node));
}

namespace {

template <typename PerElemLoss, typename PerElemGrad>
Array pairwise_loss(const char* name, const Array& a, const Array& b, PerElemLoss loss,
                    PerElemGrad dloss) {
  require_same_shape(name, a, b);
  const auto n = a.values().size();
  const double inv_n = 1.0 / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += loss(a.values()[i], b.values()[i]);
  auto node = make_node(name, {1}, {acc * inv_n}, {a.node(), b.node()});
  Node* self = node.get();
  Node* pa = a.node().get();
  Node* pb = b.node().get();
  if (node->requires_grad) {
    node->backprop = [self, pa, pb, inv_n, dloss]() {
      const double g = self->grad[0] * inv_n;
      const auto n = pa->val.size();
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) pa->grad[i] += g * dloss(pa->val[i], pb->val[i]);
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) pb->grad[i] -= g * dloss(pa->val[i], pb->val[i]);
      }
    };
  }
  return Array(std::move(node));
}

double sign_of(double r) { return r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0); }

constexpr double kClamp = 1e-7;

}  // namespace

Array mse(const Array& a, const Array& b) {
  return pairwise_loss("mse", a, b,
                       [](double x, double y) { const double r = x - y; return r * r; },
                       [](double x, double y) { return 2.0 * (x - y); });
}

Array l1(const Array& a, const Array& b) {
  return pairwise_loss("l1", a, b, [](double x, double y) { return std::abs(x - y); },
                       [](double x, double y) { return sign_of(x - y); });
}

Array huber(const Array& a, const Array& b, double delta) {
  return pairwise_loss(
      "huber", a, b,
      [delta](double x, double y) {
        const double r = std::abs(x - y);
        return r <= delta ? 0.5 * r * r : delta * (r - 0.5 * delta);
      },
      [delta](double x, double y) {
        const double r = x - y;
        return std::abs(r) <= delta ? r : delta * sign_of(r);
      });
}

Array bce(const Array& prob, const Array& target) {
  require_same_shape("bce", prob, target);
  const auto n = prob.values().size();
  const double inv_n = 1.0 / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(prob.values()[i], kClamp, 1.0 - kClamp);
    const double t = target.values()[i];
    acc -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  auto node = make_node("bce", {1}, {acc * inv_n}, {prob.node(), target.node()});
  Node* self = node.get();
  Node* pp = prob.node().get();
  Node* pt = target.node().get();
  if (node->requires_grad) {
    node->backprop = [self, pp, pt, inv_n]() {
      const double g = self->grad[0] * inv_n;
      const auto n = pp->val.size();
      if (pp->requires_grad) {
        pp->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
          const double raw = pp->val[i];
          if (raw < kClamp || raw > 1.0 - kClamp) continue;  // clamped: flat
          pp->grad[i] += g * ((1.0 - pt->val[i]) / (1.0 - raw) - pt->val[i] / raw);
        }
      }
      if (pt->requires_grad) {
        pt->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
          const double p = std::clamp(pp->val[i], kClamp, 1.0 - kClamp);
          pt->grad[i] += g * (std::log(1.0 - p) - std::log(p));
        }
      }
    };
  }
  return Array(std::move(node));
}

Array masked_l1(const Array& pred, const Array& target, const Array& mask) {
  require_same_shape("masked_l1", pred, target);
  if (pred.shape().empty()) fail_arg("masked_l1: scalar input");
  const auto channels = static_cast<std::size_t>(pred.shape()[0]);
  const auto spatial = pred.values().size() / channels;
  if (mask.values().size() != spatial) {
    fail_arg("masked_l1: mask size ", mask.values().size(), " does not match spatial extent ",
             spatial, " of ", shape_str(pred.shape()));
  }

  std::size_t positives = 0;
  for (std::size_t i = 0; i < spatial; ++i) positives += mask.values()[i] >= 0.5 ? 1 : 0;
  const double denom = positives == 0 ? 1.0 : static_cast<double>(positives * channels);
  double acc = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < spatial; ++i) {
      if (mask.values()[i] >= 0.5) {
        acc += std::abs(pred.values()[c * spatial + i] - target.values()[c * spatial + i]);
      }
    }
  }
  auto node = make_node("masked_l1", {1}, {acc / denom},
                        {pred.node(), target.node(), mask.node()});
  Node* self = node.get();
  Node* pp = pred.node().get();
  Node* pt = target.node().get();
  Node* pm = mask.node().get();
  if (node->requires_grad) {
    node->backprop = [self, pp, pt, pm, channels, spatial, denom]() {
      const double g = self->grad[0] / denom;
      if (pp->requires_grad) {
        pp->ensure_grad();
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t i = 0; i < spatial; ++i) {
            if (pm->val[i] >= 0.5) {
              pp->grad[c * spatial + i] +=
                  g * sign_of(pp->val[c * spatial + i] - pt->val[c * spatial + i]);
            }
          }
        }
      }
      if (pt->requires_grad) {
        pt->ensure_grad();
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t i = 0; i < spatial; ++i) {
            if (pm->val[i] >= 0.5) {
              pt->grad[c * spatial + i] -=
                  g * sign_of(pp->val[c * spatial + i] - pt->val[c * spatial + i]);
            }
          }
        }
      }
      // The mask is a hard selector, not a differentiable input.
    };
  }
  return Array(std::move(node));
}

}  // namespace voxsr::tensor
