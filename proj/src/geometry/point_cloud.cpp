#include "voxsr/geometry/point_cloud.hpp"

#include <cmath>

#include "voxsr/common/error.hpp"

namespace voxsr::geometry {

void PointCloud::check_valid() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) fail("point cloud: non-finite coordinate at index ", i);
  }
  for (const auto& [name, values] : attrs) {
    if (values.size() != points.size()) {
      fail("point cloud: attr '", name, "' has ", values.size(), " values for ", points.size(),
           " points");
    }
  }
}

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double radians,
                                               const Vec3& translation) {
  RigidTransform T;
  T.rotation = Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix();
  T.translation = translation;
  return T;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(rotation.transpose() * translation);
  return inv;
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

void RigidTransform::check_valid(double tol) const {
  const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
  if (err.cwiseAbs().maxCoeff() > tol) {
    fail("rigid transform: rotation not orthonormal (max deviation ",
         err.cwiseAbs().maxCoeff(), ")");
  }
  if (std::abs(rotation.determinant() - 1.0) > tol) {
    fail("rigid transform: det(R) = ", rotation.determinant(), ", expected +1");
  }
  if (!translation.allFinite()) fail("rigid transform: non-finite translation");
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& T) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(T.apply(p));
  out.attrs = cloud.attrs;
  return out;
}

}  // namespace voxsr::geometry
