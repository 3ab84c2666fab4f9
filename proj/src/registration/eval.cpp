#include "voxsr/registration/eval.hpp"

#include <algorithm>
#include <cmath>

#include "voxsr/common/error.hpp"

namespace voxsr::registration {

RegResult evaluate_registration(const geometry::RigidTransform& estimate,
                                const geometry::RigidTransform& ground_truth,
                                const RegThresholds& thresholds) {
  estimate.check_valid(1e-6);
  ground_truth.check_valid(1e-6);
  RegResult out;
  out.estimate = estimate;
  const double trace = (estimate.rotation.transpose() * ground_truth.rotation).trace();
  const double arg = std::clamp((trace - 1.0) / 2.0, -1.0, 1.0);
  out.re_deg = std::acos(arg) * 180.0 / M_PI;
  out.te_m = (estimate.translation - ground_truth.translation).norm();
  out.success = out.te_m < thresholds.te_m && out.re_deg < thresholds.re_deg;
  return out;
}

RecallSummary registration_recall(const std::vector<RegResult>& results) {
  if (results.empty()) fail_arg("registration_recall: empty result list");
  RecallSummary s;
  s.total = results.size();
  double re_succ = 0.0, te_succ = 0.0;
  for (const auto& r : results) {
    s.re_all += r.re_deg;
    s.te_all += r.te_m;
    if (r.success) {
      ++s.successes;
      re_succ += r.re_deg;
      te_succ += r.te_m;
    }
  }
  s.re_all /= static_cast<double>(s.total);
  s.te_all /= static_cast<double>(s.total);
  s.recall_pct = 100.0 * static_cast<double>(s.successes) / static_cast<double>(s.total);
  if (s.successes > 0) {
    s.re_succ = re_succ / static_cast<double>(s.successes);
    s.te_succ = te_succ / static_cast<double>(s.successes);
  }
  return s;
}

}  // namespace voxsr::registration
