#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <map>
#include <string>
#include <vector>

namespace voxsr::geometry {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// A set of 3D points (meters) with optional named per-point scalar channels.
struct PointCloud {
  std::vector<Vec3> points;
  std::map<std::string, std::vector<float>> attrs;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  // Throws if any coordinate is non-finite or an attr channel does not have
  // exactly one value per point.
  void check_valid() const;
};

/// Proper rigid motion: p' = R * p + t.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_axis_angle(const Vec3& axis, double radians,
                                        const Vec3& translation = Vec3::Zero());

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;

  // Composition: (a * b)(p) == a(b(p)).
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

  // Orthonormality and det(R) = +1, both within tol.
  void check_valid(double tol = 1e-9) const;
};

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& T);

}  // namespace voxsr::geometry
