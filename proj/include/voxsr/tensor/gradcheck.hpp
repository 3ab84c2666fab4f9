#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "voxsr/common/rng.hpp"
#include "voxsr/tensor/array.hpp"

namespace voxsr::tensor {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  double tol = 1e-4;
  bool pass = false;
};

/// Compares reverse-mode gradients of a scalar-valued builder against
/// central finite differences (step h) over every element of every input.
/// Relative error uses a unit floor: |a - n| / max(1, |a|, |n|).
double finite_diff_max_rel_err(const std::function<Array(std::vector<Array>&)>& build,
                               std::vector<Array>& inputs, double h = 1e-5);

/// Runs the registered finite-difference checks for every differentiable op
/// (trials per op with fresh random inputs) plus the conv3d/conv_transpose3d
/// adjoint identity. Deterministic per seed.
std::vector<GradCheckResult> run_gradchecks(std::uint64_t seed, int trials = 10);

}  // namespace voxsr::tensor
