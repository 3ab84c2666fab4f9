#include "voxsr/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "voxsr/common/error.hpp"
#include "voxsr/metrics/nn_index.hpp"

namespace voxsr::metrics {

namespace {

std::vector<geometry::Vec3> project(const PointCloud& cloud, MetricMode mode) {
  std::vector<geometry::Vec3> pts = cloud.points;
  if (mode == MetricMode::Xy) {
    for (auto& p : pts) p.z() = 0.0;
  }
  return pts;
}

void require_non_empty(const char* op, const PointCloud& c, const char* side) {
  if (c.empty()) fail_arg(op, ": empty cloud (", side, ")");
}

struct Directed {
  double mean_sq = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

Directed directed_stats(const std::vector<geometry::Vec3>& from, const NnIndex& to) {
  Directed out;
  for (const auto& p : from) {
    const double d_sq = to.nearest_sq(p);
    const double d = std::sqrt(d_sq);
    out.mean_sq += d_sq;
    out.mean += d;
    out.max = std::max(out.max, d);
  }
  out.mean_sq /= static_cast<double>(from.size());
  out.mean /= static_cast<double>(from.size());
  return out;
}

}  // namespace

double chamfer(const PointCloud& a, const PointCloud& b, MetricMode mode) {
  require_non_empty("chamfer", a, "first");
  require_non_empty("chamfer", b, "second");
  const auto pa = project(a, mode);
  const auto pb = project(b, mode);
  const NnIndex ia(pa), ib(pb);
  return directed_stats(pa, ib).mean_sq + directed_stats(pb, ia).mean_sq;
}

double ucd(const PointCloud& a, const PointCloud& b, MetricMode mode) {
  require_non_empty("ucd", a, "first");
  require_non_empty("ucd", b, "second");
  const auto pa = project(a, mode);
  const NnIndex ib(project(b, mode));
  return directed_stats(pa, ib).mean_sq;
}

double hausdorff(const PointCloud& a, const PointCloud& b, MetricMode mode) {
  require_non_empty("hausdorff", a, "first");
  require_non_empty("hausdorff", b, "second");
  const auto pa = project(a, mode);
  const auto pb = project(b, mode);
  const NnIndex ia(pa), ib(pb);
  return std::max(directed_stats(pa, ib).max, directed_stats(pb, ia).max);
}

double mhd(const PointCloud& a, const PointCloud& b, MetricMode mode) {
  require_non_empty("mhd", a, "first");
  require_non_empty("mhd", b, "second");
  const auto pa = project(a, mode);
  const auto pb = project(b, mode);
  const NnIndex ia(pa), ib(pb);
  return std::max(directed_stats(pa, ib).mean, directed_stats(pb, ia).mean);
}

double umhd(const PointCloud& a, const PointCloud& b, MetricMode mode) {
  require_non_empty("umhd", a, "first");
  require_non_empty("umhd", b, "second");
  const auto pa = project(a, mode);
  const NnIndex ib(project(b, mode));
  return directed_stats(pa, ib).mean;
}

double fscore(const PointCloud& a, const PointCloud& b, double tau, MetricMode mode) {
  require_non_empty("fscore", a, "first");
  require_non_empty("fscore", b, "second");
  if (!(tau > 0)) fail_arg("fscore: tau must be > 0");
  const auto pa = project(a, mode);
  const auto pb = project(b, mode);
  const NnIndex ia(pa), ib(pb);
  const double tau_sq = tau * tau;

  std::size_t hits_a = 0;
  for (const auto& p : pa) hits_a += ib.nearest_sq(p) <= tau_sq ? 1 : 0;
  std::size_t hits_b = 0;
  for (const auto& p : pb) hits_b += ia.nearest_sq(p) <= tau_sq ? 1 : 0;

  const double precision = static_cast<double>(hits_a) / static_cast<double>(pa.size());
  const double recall = static_cast<double>(hits_b) / static_cast<double>(pb.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["values"] = values;
  j["count_generated"] = count_a;
  j["count_reference"] = count_b;
  j["config"] = {{"fscore_tau", config.fscore_tau},
                 {"mode", config.mode == MetricMode::Xyz ? "xyz" : "xy"},
                 {"bev",
                  {{"min_x", config.bev.min_x},
                   {"min_y", config.bev.min_y},
                   {"nx", config.bev.nx},
                   {"ny", config.bev.ny},
                   {"cell", config.bev.cell}}}};
  return j;
}

MetricReport evaluate_pair(const PointCloud& gen, const PointCloud& ref,
                           const MetricConfig& config) {
  MetricReport report;
  report.config = config;
  report.count_a = gen.size();
  report.count_b = ref.size();
  report.values["cd"] = chamfer(gen, ref, config.mode);
  report.values["ucd"] = ucd(gen, ref, config.mode);
  report.values["hd"] = hausdorff(gen, ref, config.mode);
  report.values["mhd"] = mhd(gen, ref, config.mode);
  report.values["umhd"] = umhd(gen, ref, config.mode);
  report.values["fscore"] = fscore(gen, ref, config.fscore_tau, config.mode);
  report.values["jsd_bev"] = jsd_bev(gen, ref, config.bev);
  for (const auto& [name, value] : report.values) {
    if (!std::isfinite(value)) fail("evaluate_pair: non-finite metric '", name, "'");
  }
  return report;
}

}  // namespace voxsr::metrics
