#include "voxsr/metrics/bev.hpp"

#include <algorithm>
#include <cmath>

#include "voxsr/common/error.hpp"

namespace voxsr::metrics {

void BevGridSpec::check_valid() const {
  if (nx < 1 || ny < 1) fail_arg("bev grid: bin counts must be >= 1");
  if (!(cell > 0)) fail_arg("bev grid: cell size must be > 0");
}

std::vector<double> bev_histogram(const geometry::PointCloud& cloud, const BevGridSpec& spec) {
  spec.check_valid();
  if (cloud.empty()) fail_arg("bev_histogram: empty cloud");
  std::vector<double> hist(spec.bins(), 0.0);
  std::size_t inside = 0;
  for (const auto& p : cloud.points) {
    const double fx = std::floor((p.x() - spec.min_x) / spec.cell);
    const double fy = std::floor((p.y() - spec.min_y) / spec.cell);
    if (fx < 0 || fx >= spec.nx || fy < 0 || fy >= spec.ny) continue;
    hist[static_cast<std::size_t>(fx) * spec.ny + static_cast<std::size_t>(fy)] += 1.0;
    ++inside;
  }
  if (inside == 0) fail_arg("bev_histogram: no points inside the grid");
  for (auto& v : hist) v /= static_cast<double>(inside);
  return hist;
}

double jsd_bev(const geometry::PointCloud& a, const geometry::PointCloud& b,
               const BevGridSpec& spec) {
  const auto pa = bev_histogram(a, spec);
  const auto pb = bev_histogram(b, spec);
  double jsd = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double m = 0.5 * (pa[i] + pb[i]);
    if (pa[i] > 0) jsd += 0.5 * pa[i] * std::log2(pa[i] / m);
    if (pb[i] > 0) jsd += 0.5 * pb[i] * std::log2(pb[i] / m);
  }
  return std::max(0.0, jsd);
}

namespace {

double hist_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

double mmd_bev(const std::vector<geometry::PointCloud>& set_a,
               const std::vector<geometry::PointCloud>& set_b, const BevGridSpec& spec) {
  if (set_a.size() < 2 || set_b.size() < 2) {
    fail_arg("mmd_bev: the unbiased estimator needs at least 2 clouds per set, got ",
             set_a.size(), " and ", set_b.size());
  }
  std::vector<std::vector<double>> ha, hb;
  ha.reserve(set_a.size());
  hb.reserve(set_b.size());
  for (const auto& c : set_a) ha.push_back(bev_histogram(c, spec));
  for (const auto& c : set_b) hb.push_back(bev_histogram(c, spec));

  // Median pairwise distance over the pooled histograms sets the bandwidth.
  std::vector<std::vector<double>> pooled = ha;
  pooled.insert(pooled.end(), hb.begin(), hb.end());
  std::vector<double> dists;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    for (std::size_t j = i + 1; j < pooled.size(); ++j) {
      dists.push_back(hist_dist(pooled[i], pooled[j]));
    }
  }
  std::sort(dists.begin(), dists.end());
  double bandwidth = dists[dists.size() / 2];
  if (!(bandwidth > 0)) bandwidth = 1.0;
  const double gamma = 1.0 / (2.0 * bandwidth * bandwidth);
  auto kernel = [gamma](const std::vector<double>& x, const std::vector<double>& y) {
    const double d = hist_dist(x, y);
    return std::exp(-gamma * d * d);
  };

  const auto m = static_cast<double>(ha.size());
  const auto n = static_cast<double>(hb.size());
  double kaa = 0.0, kbb = 0.0, kab = 0.0;
  for (std::size_t i = 0; i < ha.size(); ++i) {
    for (std::size_t j = 0; j < ha.size(); ++j) {
      if (i != j) kaa += kernel(ha[i], ha[j]);
    }
  }
  for (std::size_t i = 0; i < hb.size(); ++i) {
    for (std::size_t j = 0; j < hb.size(); ++j) {
      if (i != j) kbb += kernel(hb[i], hb[j]);
    }
  }
  for (const auto& x : ha) {
    for (const auto& y : hb) kab += kernel(x, y);
  }
  const double mmd_sq =
      kaa / (m * (m - 1.0)) + kbb / (n * (n - 1.0)) - 2.0 * kab / (m * n);
  return std::max(0.0, mmd_sq);
}

}  // namespace voxsr::metrics
