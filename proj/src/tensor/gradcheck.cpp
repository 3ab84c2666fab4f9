#include "voxsr/tensor/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "voxsr/common/error.hpp"

namespace voxsr::tensor {

namespace {

Array random_array(Rng& rng, Shape shape, double lo, double hi, bool requires_grad = true) {
  const auto n = static_cast<std::size_t>(numel(shape));
  std::vector<double> vals(n);
  for (auto& v : vals) v = rng.uniform(lo, hi);
  return Array::from_vector(std::move(shape), std::move(vals), requires_grad);
}

// Reduces an op output to a scalar through fixed random weights so every
// output element influences the loss with a distinct coefficient.
Array weighted_sum(const Array& out, Rng& rng) {
  const auto n = static_cast<std::size_t>(out.size());
  std::vector<double> w(n);
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  return sum(mul(out, Array::from_vector(out.shape(), std::move(w))));
}

}  // namespace

double finite_diff_max_rel_err(const std::function<Array(std::vector<Array>&)>& build,
                               std::vector<Array>& inputs, double h) {
  Array loss = build(inputs);
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (auto& in : inputs) {
    analytic.push_back(in.has_grad() ? in.grad() : std::vector<double>(in.values().size(), 0.0));
  }

  double worst = 0.0;
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    if (!inputs[p].requires_grad()) continue;
    auto& vals = inputs[p].values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double keep = vals[i];
      vals[i] = keep + h;
      const double fp = build(inputs).scalar();
      vals[i] = keep - h;
      const double fm = build(inputs).scalar();
      vals[i] = keep;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[p][i];
      const double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  for (auto& in : inputs) in.zero_grad();
  return worst;
}

namespace {

struct CheckSpec {
  std::string name;
  std::function<double(Rng&)> run;  // returns max rel err for one trial
};

double check_unary(Rng& rng, const std::function<Array(const Array&)>& op, double lo = -2.0,
                   double hi = 2.0) {
  std::vector<Array> in{random_array(rng, {2, 3, 4}, lo, hi)};
  Rng wrng(rng.next_u64());
  auto build = [&op, &wrng](std::vector<Array>& xs) {
    Rng local = wrng;  // same weights every rebuild
    return weighted_sum(op(xs[0]), local);
  };
  return finite_diff_max_rel_err(build, in);
}

double check_binary(Rng& rng, const std::function<Array(const Array&, const Array&)>& op) {
  std::vector<Array> in{random_array(rng, {2, 3, 4}, -2.0, 2.0),
                        random_array(rng, {2, 3, 4}, -2.0, 2.0)};
  Rng wrng(rng.next_u64());
  auto build = [&op, &wrng](std::vector<Array>& xs) {
    Rng local = wrng;
    return weighted_sum(op(xs[0], xs[1]), local);
  };
  return finite_diff_max_rel_err(build, in);
}

double check_scalar_loss(Rng& rng, const std::function<Array(const Array&, const Array&)>& op,
                         double lo = -2.0, double hi = 2.0) {
  std::vector<Array> in{random_array(rng, {3, 4}, lo, hi), random_array(rng, {3, 4}, lo, hi)};
  auto build = [&op](std::vector<Array>& xs) { return op(xs[0], xs[1]); };
  return finite_diff_max_rel_err(build, in);
}

double adjoint_identity_err(Rng& rng, int stride, int pad) {
  // <conv3d(x,w), y> == <x, conv_transpose3d(y,w)> with the shared kernel
  // read as (Cout,Cin,k,k,k) by conv3d and (Cin_t=Cout, Cout_t=Cin, ...) by
  // the transpose. Extents satisfy (in + 2p - k) % s == 0 so the transpose
  // maps back onto the exact input shape.
  const int ci = 2, co = 3, k = 3, d = 5, h = 5, w = 7;
  Array x = random_array(rng, {ci, d, h, w}, -1.0, 1.0, false);
  Array kernel = random_array(rng, {co, ci, k, k, k}, -1.0, 1.0, false);
  Array zero_co = Array::constant({co}, 0.0);
  Array zero_ci = Array::constant({ci}, 0.0);

  Array fwd = conv3d(x, kernel, zero_co, stride, pad);
  Array y = random_array(rng, fwd.shape(), -1.0, 1.0, false);
  Array back = conv_transpose3d(y, kernel, zero_ci, stride, pad);
  if (back.shape() != x.shape()) {
    fail("adjoint check: shape mismatch ", shape_str(back.shape()), " vs ",
         shape_str(x.shape()));
  }

  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < fwd.values().size(); ++i) lhs += fwd.values()[i] * y.values()[i];
  for (std::size_t i = 0; i < back.values().size(); ++i) rhs += back.values()[i] * x.values()[i];
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

std::vector<CheckSpec> make_checks() {
  std::vector<CheckSpec> checks;
  auto push = [&checks](std::string name, std::function<double(Rng&)> run) {
    checks.push_back({std::move(name), std::move(run)});
  };

  push("add", [](Rng& r) { return check_binary(r, [](auto& a, auto& b) { return add(a, b); }); });
  push("sub", [](Rng& r) { return check_binary(r, [](auto& a, auto& b) { return sub(a, b); }); });
  push("mul", [](Rng& r) { return check_binary(r, [](auto& a, auto& b) { return mul(a, b); }); });
  push("scale", [](Rng& r) { return check_unary(r, [](auto& a) { return scale(a, -1.7); }); });
  push("add_scalar",
       [](Rng& r) { return check_unary(r, [](auto& a) { return add_scalar(a, 0.4); }); });
  push("sigmoid", [](Rng& r) { return check_unary(r, [](auto& a) { return sigmoid(a); }); });
  push("silu", [](Rng& r) { return check_unary(r, [](auto& a) { return silu(a); }); });
  push("tanh", [](Rng& r) { return check_unary(r, [](auto& a) { return tanh_op(a); }); });
  push("reshape",
       [](Rng& r) { return check_unary(r, [](auto& a) { return reshape(a, {4, 6}); }); });
  push("slice", [](Rng& r) {
    return check_unary(r, [](auto& a) { return slice(a, {0, 1, 1}, {2, 3, 4}); });
  });
  push("sum", [](Rng& r) {
    std::vector<Array> in{random_array(r, {2, 3}, -2.0, 2.0)};
    auto build = [](std::vector<Array>& xs) { return sum(xs[0]); };
    return finite_diff_max_rel_err(build, in);
  });
  push("mean", [](Rng& r) {
    std::vector<Array> in{random_array(r, {2, 3}, -2.0, 2.0)};
    auto build = [](std::vector<Array>& xs) { return mean(xs[0]); };
    return finite_diff_max_rel_err(build, in);
  });
  push("add_channel_bias", [](Rng& r) {
    std::vector<Array> in{random_array(r, {3, 4, 2}, -2.0, 2.0),
                          random_array(r, {3}, -1.0, 1.0)};
    Rng wrng(r.next_u64());
    auto build = [&wrng](std::vector<Array>& xs) {
      Rng local = wrng;
      return weighted_sum(add_channel_bias(xs[0], xs[1]), local);
    };
    return finite_diff_max_rel_err(build, in);
  });
  push("concat", [](Rng& r) {
    std::vector<Array> in{random_array(r, {2, 2, 3}, -2.0, 2.0),
                          random_array(r, {3, 2, 3}, -2.0, 2.0)};
    Rng wrng(r.next_u64());
    auto build = [&wrng](std::vector<Array>& xs) {
      Rng local = wrng;
      return weighted_sum(concat({xs[0], xs[1]}, 0), local);
    };
    return finite_diff_max_rel_err(build, in);
  });
  push("matmul", [](Rng& r) {
    std::vector<Array> in{random_array(r, {3, 4}, -1.0, 1.0), random_array(r, {4, 2}, -1.0, 1.0)};
    Rng wrng(r.next_u64());
    auto build = [&wrng](std::vector<Array>& xs) {
      Rng local = wrng;
      return weighted_sum(matmul(xs[0], xs[1]), local);
    };
    return finite_diff_max_rel_err(build, in);
  });
  push("linear", [](Rng& r) {
    std::vector<Array> in{random_array(r, {5}, -1.0, 1.0), random_array(r, {3, 5}, -1.0, 1.0),
                          random_array(r, {3}, -1.0, 1.0)};
    Rng wrng(r.next_u64());
    auto build = [&wrng](std::vector<Array>& xs) {
      Rng local = wrng;
      return weighted_sum(linear(xs[0], xs[1], xs[2]), local);
    };
    return finite_diff_max_rel_err(build, in);
  });
  push("group_norm", [](Rng& r) {
    std::vector<Array> in{random_array(r, {4, 3, 3}, -2.0, 2.0),
                          random_array(r, {4}, 0.5, 1.5), random_array(r, {4}, -0.5, 0.5)};
    Rng wrng(r.next_u64());
    auto build = [&wrng](std::vector<Array>& xs) {
      Rng local = wrng;
      return weighted_sum(group_norm(xs[0], 2, xs[1], xs[2]), local);
    };
    return finite_diff_max_rel_err(build, in);
  });
  push("upsample_nearest2d", [](Rng& r) {
    std::vector<Array> in{random_array(r, {2, 3, 3}, -2.0, 2.0)};
    Rng wrng(r.next_u64());
    auto build = [&wrng](std::vector<Array>& xs) {
      Rng local = wrng;
      return weighted_sum(upsample_nearest2d(xs[0], 2), local);
    };
    return finite_diff_max_rel_err(build, in);
  });
  push("conv2d_s1", [](Rng& r) {
    std::vector<Array> in{random_array(r, {2, 5, 5}, -1.0, 1.0),
                          random_array(r, {3, 2, 3, 3}, -1.0, 1.0),
                          random_array(r, {3}, -0.5, 0.5)};
    Rng wrng(r.next_u64());
    auto build = [&wrng](std::vector<Array>& xs) {
      Rng local = wrng;
      return weighted_sum(conv2d(xs[0], xs[1], xs[2], 1, 1), local);
    };
    return finite_diff_max_rel_err(build, in);
  });
  push("conv2d_s2", [](Rng& r) {
    std::vector<Array> in{random_array(r, {2, 6, 6}, -1.0, 1.0),
                          random_array(r, {3, 2, 3, 3}, -1.0, 1.0),
                          random_array(r, {3}, -0.5, 0.5)};
    Rng wrng(r.next_u64());
    auto build = [&wrng](std::vector<Array>& xs) {
      Rng local = wrng;
      return weighted_sum(conv2d(xs[0], xs[1], xs[2], 2, 1), local);
    };
    return finite_diff_max_rel_err(build, in);
  });
  push("conv3d", [](Rng& r) {
    std::vector<Array> in{random_array(r, {2, 3, 4, 4}, -1.0, 1.0),
                          random_array(r, {2, 2, 3, 3, 3}, -1.0, 1.0),
                          random_array(r, {2}, -0.5, 0.5)};
    Rng wrng(r.next_u64());
    auto build = [&wrng](std::vector<Array>& xs) {
      Rng local = wrng;
      return weighted_sum(conv3d(xs[0], xs[1], xs[2], 1, 1), local);
    };
    return finite_diff_max_rel_err(build, in);
  });
  push("conv_transpose3d_s1", [](Rng& r) {
    std::vector<Array> in{random_array(r, {2, 3, 3, 3}, -1.0, 1.0),
                          random_array(r, {2, 3, 3, 3, 3}, -1.0, 1.0),
                          random_array(r, {3}, -0.5, 0.5)};
    Rng wrng(r.next_u64());
    auto build = [&wrng](std::vector<Array>& xs) {
      Rng local = wrng;
      return weighted_sum(conv_transpose3d(xs[0], xs[1], xs[2], 1, 1), local);
    };
    return finite_diff_max_rel_err(build, in);
  });
  push("conv_transpose3d_s2", [](Rng& r) {
    std::vector<Array> in{random_array(r, {2, 3, 3, 3}, -1.0, 1.0),
                          random_array(r, {2, 2, 2, 2, 2}, -1.0, 1.0),
                          random_array(r, {2}, -0.5, 0.5)};
    Rng wrng(r.next_u64());
    auto build = [&wrng](std::vector<Array>& xs) {
      Rng local = wrng;
      return weighted_sum(conv_transpose3d(xs[0], xs[1], xs[2], 2, 0), local);
    };
    return finite_diff_max_rel_err(build, in);
  });
  push("mse", [](Rng& r) {
    return check_scalar_loss(r, [](auto& a, auto& b) { return mse(a, b); });
  });
  push("l1", [](Rng& r) {
    return check_scalar_loss(r, [](auto& a, auto& b) { return l1(a, b); });
  });
  push("huber", [](Rng& r) {
    return check_scalar_loss(r, [](auto& a, auto& b) { return huber(a, b, 1.0); });
  });
  push("bce", [](Rng& r) {
    // probabilities away from the clamp band and binary-ish targets
    std::vector<Array> in{random_array(r, {3, 4}, 0.05, 0.95)};
    Array target = random_array(r, {3, 4}, 0.0, 1.0, false);
    for (auto& t : target.values()) t = t >= 0.5 ? 1.0 : 0.0;
    auto build = [target](std::vector<Array>& xs) { return bce(xs[0], target); };
    return finite_diff_max_rel_err(build, in);
  });
  push("masked_l1", [](Rng& r) {
    std::vector<Array> in{random_array(r, {3, 2, 4}, -1.0, 1.0),
                          random_array(r, {3, 2, 4}, -1.0, 1.0)};
    Array mask = random_array(r, {2, 4}, 0.0, 1.0, false);
    for (auto& m : mask.values()) m = m >= 0.4 ? 1.0 : 0.0;
    auto build = [mask](std::vector<Array>& xs) { return masked_l1(xs[0], xs[1], mask); };
    return finite_diff_max_rel_err(build, in);
  });
  push("offset_reparam", [](Rng& r) {
    // (2*sigmoid(raw) - 1) * l_length, the decoder offset head activation
    const double l_length = 0.0625;
    std::vector<Array> in{random_array(r, {3, 2, 3}, -2.0, 2.0)};
    Rng wrng(r.next_u64());
    auto build = [&wrng, l_length](std::vector<Array>& xs) {
      Rng local = wrng;
      Array off = add_scalar(scale(sigmoid(xs[0]), 2.0 * l_length), -l_length);
      return weighted_sum(off, local);
    };
    return finite_diff_max_rel_err(build, in);
  });

  return checks;
}

}  // namespace

std::vector<GradCheckResult> run_gradchecks(std::uint64_t seed, int trials) {
  std::vector<GradCheckResult> results;
  for (const auto& check : make_checks()) {
    Rng rng(seed, check.name);
    GradCheckResult res;
    res.name = check.name;
    res.tol = 1e-4;
    for (int t = 0; t < trials; ++t) {
      res.max_rel_err = std::max(res.max_rel_err, check.run(rng));
    }
    res.pass = res.max_rel_err < res.tol;
    results.push_back(std::move(res));
  }

  {
    Rng rng(seed, "conv_adjoint");
    GradCheckResult res;
    res.name = "conv3d_adjoint";
    res.tol = 1e-9;
    for (int t = 0; t < trials; ++t) {
      res.max_rel_err = std::max(res.max_rel_err, adjoint_identity_err(rng, 1, 1));
      res.max_rel_err = std::max(res.max_rel_err, adjoint_identity_err(rng, 2, 1));
    }
    res.pass = res.max_rel_err < res.tol;
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace voxsr::tensor
