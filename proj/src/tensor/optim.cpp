#include "voxsr/tensor/optim.hpp"

#include <cmath>

#include "voxsr/common/error.hpp"

namespace voxsr::tensor {

AdamW::AdamW(std::vector<Array> params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  slots_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto n = params_[i].values().size();
    slots_[i].m.assign(n, 0.0);
    slots_[i].v.assign(n, 0.0);
  }
}

void AdamW::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    auto& vals = p.values();
    auto& slot = slots_[i];
    const bool has_grad = p.has_grad();
    const std::vector<double>* grad = has_grad ? &p.grad() : nullptr;
    for (std::size_t j = 0; j < vals.size(); ++j) {
      const double g = has_grad ? (*grad)[j] : 0.0;
      if (!std::isfinite(g)) fail("adamw: non-finite gradient in parameter ", i, " at ", j);
      slot.m[j] = cfg_.beta1 * slot.m[j] + (1.0 - cfg_.beta1) * g;
      slot.v[j] = cfg_.beta2 * slot.v[j] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = slot.m[j] / bc1;
      const double vhat = slot.v[j] / bc2;
      vals[j] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * vals[j]);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace voxsr::tensor
