#include "voxsr/diffusion/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "voxsr/common/error.hpp"

namespace voxsr::diffusion {

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "linear") return ScheduleKind::Linear;
  if (s == "cosine") return ScheduleKind::Cosine;
  fail_arg("unknown schedule kind '", s, "' (expected linear or cosine)");
}

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::Linear ? "linear" : "cosine";
}

void NoiseSchedule::check_valid() const {
  if (timesteps < 2) fail_arg("noise schedule: T must be >= 2");
  double prev = 1.0;
  for (int t = 1; t <= timesteps; ++t) {
    const double b = beta_at(t);
    if (!(b > 0.0 && b < 1.0)) fail("noise schedule: beta_", t, " = ", b, " outside (0,1)");
    const double ab = alpha_bar_at(t);
    if (!(ab < prev)) fail("noise schedule: alpha_bar not strictly decreasing at t = ", t);
    prev = ab;
  }
}

NoiseSchedule make_schedule(int timesteps, ScheduleKind kind) {
  if (timesteps < 2) fail_arg("make_schedule: T must be >= 2, got ", timesteps);
  NoiseSchedule s;
  s.timesteps = timesteps;
  s.kind = kind;
  s.beta.resize(static_cast<std::size_t>(timesteps));
  s.alpha_bar.resize(static_cast<std::size_t>(timesteps));

  if (kind == ScheduleKind::Linear) {
    const double ref_scale = 1000.0 / static_cast<double>(timesteps);
    const double b0 = 1e-4, b1 = 0.02;
    for (int t = 1; t <= timesteps; ++t) {
      const double frac = static_cast<double>(t - 1) / static_cast<double>(timesteps - 1);
      s.beta[static_cast<std::size_t>(t - 1)] =
          std::min(0.999, (b0 + (b1 - b0) * frac) * ref_scale);
    }
  } else {
    auto f = [timesteps](double t) {
      const double arg = ((t / timesteps + 0.008) / 1.008) * M_PI / 2.0;
      const double c = std::cos(arg);
      return c * c;
    };
    const double f0 = f(0.0);
    double prev_ab = 1.0;
    for (int t = 1; t <= timesteps; ++t) {
      const double ab = f(static_cast<double>(t)) / f0;
      const double b = std::min(0.999, 1.0 - ab / prev_ab);
      s.beta[static_cast<std::size_t>(t - 1)] = b;
      prev_ab = ab;
    }
  }

  double ab = 1.0;
  for (int t = 1; t <= timesteps; ++t) {
    ab *= 1.0 - s.beta[static_cast<std::size_t>(t - 1)];
    s.alpha_bar[static_cast<std::size_t>(t - 1)] = ab;
  }
  s.check_valid();
  return s;
}

}  // namespace voxsr::diffusion
