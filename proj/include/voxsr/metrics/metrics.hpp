#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "voxsr/geometry/point_cloud.hpp"
#include "voxsr/metrics/bev.hpp"

namespace voxsr::metrics {

using geometry::PointCloud;

/// Xyz matches in 3D; Xy drops z before matching (the 2D evaluation mode).
enum class MetricMode { Xyz, Xy };

// Chamfer distance: mean squared nearest-neighbor distance A->B plus B->A.
double chamfer(const PointCloud& a, const PointCloud& b, MetricMode mode = MetricMode::Xyz);
// Unidirectional chamfer: the A->B term only.
double ucd(const PointCloud& a, const PointCloud& b, MetricMode mode = MetricMode::Xyz);
// Hausdorff: max of the two directed maxima (unsquared).
double hausdorff(const PointCloud& a, const PointCloud& b, MetricMode mode = MetricMode::Xyz);
// Modified Hausdorff: max of the two directed means (unsquared).
double mhd(const PointCloud& a, const PointCloud& b, MetricMode mode = MetricMode::Xyz);
// Unidirectional modified Hausdorff: directed mean A->B.
double umhd(const PointCloud& a, const PointCloud& b, MetricMode mode = MetricMode::Xyz);
// F-score at threshold tau: harmonic mean of the tau-precision and recall.
double fscore(const PointCloud& a, const PointCloud& b, double tau,
              MetricMode mode = MetricMode::Xyz);

struct MetricConfig {
  double fscore_tau = 0.1;
  MetricMode mode = MetricMode::Xyz;
  BevGridSpec bev;
};

struct MetricReport {
  std::map<std::string, double> values;
  std::size_t count_a = 0;
  std::size_t count_b = 0;
  MetricConfig config;

  nlohmann::json to_json() const;
};

/// CD, HD, MHD, UCD, UMHD, F-score and BEV JSD for one (generated,
/// reference) pair under the given configuration.
MetricReport evaluate_pair(const PointCloud& gen, const PointCloud& ref,
                           const MetricConfig& config);

}  // namespace voxsr::metrics
