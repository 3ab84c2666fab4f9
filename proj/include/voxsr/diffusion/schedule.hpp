#pragma once

#include <string>
#include <vector>

namespace voxsr::diffusion {

enum class ScheduleKind { Linear, Cosine };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind kind);

/// Per-timestep noise levels. Index convention: beta[t-1] and
/// alpha_bar[t-1] hold the values for timestep t in [1, T];
/// alpha_bar_at(0) == 1 (the clean-data limit).
struct NoiseSchedule {
  int timesteps = 0;
  ScheduleKind kind = ScheduleKind::Cosine;
  std::vector<double> beta;
  std::vector<double> alpha_bar;

  double beta_at(int t) const { return beta.at(static_cast<std::size_t>(t - 1)); }
  double alpha_bar_at(int t) const {
    return t == 0 ? 1.0 : alpha_bar.at(static_cast<std::size_t>(t - 1));
  }

  // 0 < beta < 1 and alpha_bar strictly decreasing.
  void check_valid() const;
};

/// Linear: beta interpolated 1e-4 -> 0.02 at the reference length T = 1000
/// and rescaled by 1000/T for other lengths (keeps the total corruption
/// comparable so short schedules still end near pure noise). Cosine:
/// alpha_bar(t) = cos^2(((t/T + 0.008)/1.008) * pi/2) normalized to 1 at
/// t = 0, beta clipped to <= 0.999. Throws for T < 2.
NoiseSchedule make_schedule(int timesteps, ScheduleKind kind);

}  // namespace voxsr::diffusion
