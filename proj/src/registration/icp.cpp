#include "voxsr/registration/icp.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "voxsr/common/error.hpp"
#include "voxsr/metrics/nn_index.hpp"

namespace voxsr::registration {

using geometry::Mat3;
using geometry::Vec3;

RigidTransform align_pairs(const std::vector<Vec3>& source, const std::vector<Vec3>& target) {
  if (source.size() != target.size() || source.size() < 3) {
    fail_arg("align_pairs: need >= 3 paired points, got ", source.size(), " and ",
             target.size());
  }
  const auto n = static_cast<double>(source.size());
  Vec3 cs = Vec3::Zero(), ct = Vec3::Zero();
  for (const auto& p : source) cs += p;
  for (const auto& p : target) ct += p;
  cs /= n;
  ct /= n;

  Mat3 cross = Mat3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    cross += (source[i] - cs) * (target[i] - ct).transpose();
  }

  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // Rank 1 means the correspondences are collinear and the rotation about
  // that axis is unconstrained.
  if (sv(1) < 1e-12 * std::max(1.0, sv(0))) fail("icp: degenerate correspondence set");

  Mat3 flip = Mat3::Identity();
  flip(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
  RigidTransform out;
  out.rotation = svd.matrixV() * flip * svd.matrixU().transpose();
  out.translation = ct - out.rotation * cs;
  return out;
}

IcpResult icp(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
              const IcpOptions& opts) {
  if (source.size() < 3 || target.size() < 3) {
    fail_arg("icp: both clouds need at least 3 points");
  }
  init.check_valid(1e-6);
  const metrics::NnIndex index(target.points);
  const double max_corr_sq = opts.max_corr_dist * opts.max_corr_dist;

  IcpResult result;
  result.transform = init;

  std::vector<Vec3> src_pairs, tgt_pairs;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    src_pairs.clear();
    tgt_pairs.clear();
    double residual = 0.0;
    for (const auto& p : source.points) {
      const Vec3 moved = result.transform.apply(p);
      const auto hit = index.nearest(moved);
      if (hit.dist_sq > max_corr_sq) continue;
      residual += std::sqrt(hit.dist_sq);
      src_pairs.push_back(p);
      tgt_pairs.push_back(target.points[static_cast<std::size_t>(hit.index)]);
    }
    if (src_pairs.size() < 3) fail("icp: degenerate correspondence set");
    residual /= static_cast<double>(src_pairs.size());
    result.residual_history.push_back(residual);
    result.final_residual = residual;
    result.iterations = iter + 1;

    const RigidTransform updated = align_pairs(src_pairs, tgt_pairs);
    const double rot_change =
        (updated.rotation - result.transform.rotation).cwiseAbs().maxCoeff();
    const double trans_change =
        (updated.translation - result.transform.translation).norm();
    result.transform = updated;
    if (rot_change < opts.tol && trans_change < opts.tol) break;
  }
  return result;
}

}  // namespace voxsr::registration
