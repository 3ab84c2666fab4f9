// Minimal dense reverse-mode autodiff core.
//
// Arrays are value-semantic handles to graph nodes. Every op records a
// backward closure; backward() on a scalar output walks the graph in reverse
// topological order and accumulates exact gradients into every reachable
// node with requires_grad set. Values are 64-bit floats throughout.
//
// A graph instance is confined to one thread during forward/backward;
// independent graphs may run concurrently. Parameter nodes (leaves) can be
// shared across successive graphs, which is how training reuses weights.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace voxsr::tensor {

using Shape = std::vector<int>;

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> val;
  std::vector<double> grad;  // allocated lazily by the first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backprop;  // scatters this->grad into parents
  bool backward_done = false;      // meaningful on roots only

  void ensure_grad() {
    if (grad.empty()) grad.assign(val.size(), 0.0);
  }
};

class Array {
 public:
  Array() = default;
  explicit Array(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Array constant(Shape shape, double fill = 0.0);
  static Array from_vector(Shape shape, std::vector<double> values, bool requires_grad = false);
  // Trainable leaf.
  static Array param(Shape shape, std::vector<double> values);

  bool valid() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t size() const { return static_cast<std::int64_t>(node_->val.size()); }
  std::vector<double>& values() { return node_->val; }
  const std::vector<double>& values() const { return node_->val; }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool b) { node_->requires_grad = b; }

  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<double>& grad() const;
  void zero_grad() { node_->grad.clear(); }

  // Value of a one-element array.
  double scalar() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// ---- graph execution ----

// Backpropagates from a scalar root. Throws if the root is not one element
// or if called twice on the same root without rebuilding the graph.
void backward(const Array& root);

// ---- elementwise and structural ops ----

Array add(const Array& a, const Array& b);
Array sub(const Array& a, const Array& b);
Array mul(const Array& a, const Array& b);
Array scale(const Array& a, double s);
Array add_scalar(const Array& a, double c);
// x: (C, spatial...), bias: (C); adds bias[c] over the spatial extent.
Array add_channel_bias(const Array& x, const Array& bias);
Array concat(const std::vector<Array>& parts, int axis);
Array reshape(const Array& a, Shape shape);
// Half-open ND range copy.
Array slice(const Array& a, const std::vector<int>& start, const std::vector<int>& stop);

Array sigmoid(const Array& a);
Array silu(const Array& a);
Array tanh_op(const Array& a);

// ---- linear algebra ----

Array matmul(const Array& a, const Array& b);            // (m,k) x (k,n)
Array linear(const Array& x, const Array& w, const Array& b);  // x:(in), w:(out,in), b:(out)

// ---- normalization ----

Array group_norm(const Array& x, int groups, const Array& gamma, const Array& beta,
                 double eps = 1e-5);

// ---- convolutions (no batch dimension; channels first) ----

// x: (Cin,H,W), w: (Cout,Cin,kh,kw), b: (Cout)
Array conv2d(const Array& x, const Array& w, const Array& b, int stride, int pad);
// x: (Cin,D,H,W), w: (Cout,Cin,kd,kh,kw), b: (Cout)
Array conv3d(const Array& x, const Array& w, const Array& b, int stride, int pad);
// x: (Cin,D,H,W), w: (Cin,Cout,kd,kh,kw), b: (Cout); out = (D-1)*s - 2p + k
Array conv_transpose3d(const Array& x, const Array& w, const Array& b, int stride, int pad);
Array upsample_nearest2d(const Array& x, int factor);

// ---- reductions and losses ----

Array sum(const Array& a);
Array mean(const Array& a);
Array mse(const Array& a, const Array& b);
Array l1(const Array& a, const Array& b);
Array huber(const Array& a, const Array& b, double delta = 1.0);
// Binary cross entropy with probabilities clamped to [1e-7, 1-1e-7].
Array bce(const Array& prob, const Array& target);
// Mean |pred - target| over components where mask = 1. pred/target are
// (C, spatial...), mask is (spatial...); zero-positive masks give loss 0.
Array masked_l1(const Array& pred, const Array& target, const Array& mask);

}  // namespace voxsr::tensor
