#pragma once

#include <cstdint>
#include <vector>

#include "voxsr/tensor/array.hpp"

namespace voxsr::tensor {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

/// AdamW with bias correction. Parameters with no populated gradient are
/// treated as zero-gradient (and still receive weight decay if enabled).
class AdamW {
 public:
  AdamW(std::vector<Array> params, AdamWConfig cfg);

  void step();
  void zero_grad();

  std::int64_t step_count() const { return step_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  struct Slot {
    std::vector<double> m, v;
  };
  std::vector<Array> params_;
  std::vector<Slot> slots_;
  AdamWConfig cfg_;
  std::int64_t step_ = 0;
};

}  // namespace voxsr::tensor
