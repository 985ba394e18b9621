#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace dynpl {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Skew-symmetric matrix such that hat(a) * b == a.cross(b).
Mat3 hat(const Vec3& v);

Mat3 so3_exp(const Vec3& omega);

/// Principal-branch logarithm. At a rotation angle of exactly pi the axis
/// sign is ambiguous; the branch returned has its largest-magnitude axis
/// component positive.
Vec3 so3_log(const Mat3& rotation);

Mat3 so3_left_jacobian(const Vec3& omega);
Mat3 so3_left_jacobian_inverse(const Vec3& omega);

/// Projects a nearly orthonormal matrix back onto SO(3).
Mat3 orthonormalize(const Mat3& rotation);

/// Rigid-body transform. Tangent vectors are ordered (translation, rotation),
/// i.e. xi = (rho, omega).
class PoseSE3 {
 public:
  PoseSE3() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  PoseSE3(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static PoseSE3 identity() { return {}; }
  static PoseSE3 from_matrix(const Eigen::Matrix4d& m);
  static PoseSE3 from_quaternion(const Eigen::Quaterniond& q, const Vec3& t);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  PoseSE3 operator*(const PoseSE3& other) const {
    return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
  }
  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }

  PoseSE3 inverse() const {
    const Mat3 rt = rotation_.transpose();
    return {rt, -(rt * translation_)};
  }

  Eigen::Matrix4d matrix() const;
  Eigen::Quaterniond quaternion() const;

  /// Adjoint in (rho, omega) ordering: Ad * xi == log(T exp(xi) T^-1).
  Mat6 adjoint() const;

  /// Re-projects the rotation onto SO(3); called after optimizer updates.
  PoseSE3 normalized() const { return {orthonormalize(rotation_), translation_}; }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

PoseSE3 se3_exp(const Vec6& xi);
Vec6 se3_log(const PoseSE3& pose);

/// Left Jacobian of SE(3) and the inverse of the right Jacobian, used by
/// pose-graph residuals log(Z^-1 Ti^-1 Tj).
Mat6 se3_left_jacobian(const Vec6& xi);
Mat6 se3_right_jacobian_inverse(const Vec6& xi);

/// Rotation angle (radians) of the relative rotation between a and b.
double rotation_angle_between(const Mat3& a, const Mat3& b);

}  // namespace dynpl
