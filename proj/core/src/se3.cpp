#include "dynpl/se3.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace dynpl {

namespace {

constexpr double kSmallAngle = 1e-2;

Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

}  // namespace

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 so3_exp(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 w = hat(omega);
  double a = 0.0;
  double b = 0.0;
  if (theta < kSmallAngle) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * w + b * w * w;
}

Vec3 so3_log(const Mat3& rotation) {
  const double cos_theta = std::clamp((rotation.trace() - 1.0) * 0.5, -1.0, 1.0);
  const Vec3 v = 0.5 * vee(rotation - rotation.transpose());  // sin(theta) * axis
  const double sin_theta = v.norm();
  const double theta = std::atan2(sin_theta, cos_theta);

  if (cos_theta > -0.99) {
    double scale = 0.0;
    if (theta < kSmallAngle) {
      const double t2 = theta * theta;
      scale = 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0;
    } else {
      scale = theta / sin_theta;
    }
    return scale * v;
  }

  // Near pi: recover the axis from the symmetric part, (1 - cos) a a^T.
  const Mat3 sym = 0.5 * (rotation + rotation.transpose()) - cos_theta * Mat3::Identity();
  int k = 0;
  sym.diagonal().maxCoeff(&k);
  Vec3 axis = sym.col(k).normalized();
  if (sin_theta > 1e-12) {
    if (axis.dot(v) < 0.0) axis = -axis;
  } else {
    int largest = 0;
    axis.cwiseAbs().maxCoeff(&largest);
    if (axis(largest) < 0.0) axis = -axis;
  }
  return theta * axis;
}

Mat3 so3_left_jacobian(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 w = hat(omega);
  double a = 0.0;
  double b = 0.0;
  if (theta < kSmallAngle) {
    a = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
    b = 1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0;
  } else {
    a = (1.0 - std::cos(theta)) / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3::Identity() + a * w + b * w * w;
}

Mat3 so3_left_jacobian_inverse(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 w = hat(omega);
  double c = 0.0;
  if (theta < kSmallAngle) {
    c = 1.0 / 12.0 + theta2 / 720.0 + theta2 * theta2 / 30240.0;
  } else {
    c = 1.0 / theta2 - 0.5 / (theta * std::tan(0.5 * theta));
  }
  return Mat3::Identity() - 0.5 * w + c * w * w;
}

Mat3 orthonormalize(const Mat3& rotation) {
  Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

PoseSE3 PoseSE3::from_matrix(const Eigen::Matrix4d& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

PoseSE3 PoseSE3::from_quaternion(const Eigen::Quaterniond& q, const Vec3& t) {
  return {q.normalized().toRotationMatrix(), t};
}

Eigen::Matrix4d PoseSE3::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Eigen::Quaterniond PoseSE3::quaternion() const {
  Eigen::Quaterniond q(rotation_);
  q.normalize();
  // Canonical hemisphere keeps written trajectories reproducible.
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

Mat6 PoseSE3::adjoint() const {
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = rotation_;
  ad.topRightCorner<3, 3>() = hat(translation_) * rotation_;
  ad.bottomRightCorner<3, 3>() = rotation_;
  return ad;
}

PoseSE3 se3_exp(const Vec6& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 omega = xi.tail<3>();
  return {so3_exp(omega), so3_left_jacobian(omega) * rho};
}

Vec6 se3_log(const PoseSE3& pose) {
  const Vec3 omega = so3_log(pose.rotation());
  Vec6 xi;
  xi.head<3>() = so3_left_jacobian_inverse(omega) * pose.translation();
  xi.tail<3>() = omega;
  return xi;
}

Mat6 se3_left_jacobian(const Vec6& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  const double theta2 = phi.squaredNorm();
  const double theta = std::sqrt(theta2);

  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  if (theta < kSmallAngle) {
    c1 = 1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0;
    c2 = 1.0 / 24.0 - theta2 / 720.0 + theta2 * theta2 / 40320.0;
    c3 = 1.0 / 120.0 - theta2 / 2520.0;
  } else {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    c1 = (theta - s) / (theta2 * theta);
    c2 = (theta2 + 2.0 * c - 2.0) / (2.0 * theta2 * theta2);
    c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * theta2 * theta2 * theta);
  }

  const Mat3 r = hat(rho);
  const Mat3 p = hat(phi);
  const Mat3 pr = p * r;
  const Mat3 rp = r * p;
  const Mat3 prp = pr * p;
  const Mat3 q = 0.5 * r + c1 * (pr + rp + prp) + c2 * (p * pr + rp * p - 3.0 * prp) +
                 c3 * (prp * p + p * prp);

  Mat6 j = Mat6::Zero();
  const Mat3 jl = so3_left_jacobian(phi);
  j.topLeftCorner<3, 3>() = jl;
  j.topRightCorner<3, 3>() = q;
  j.bottomRightCorner<3, 3>() = jl;
  return j;
}

Mat6 se3_right_jacobian_inverse(const Vec6& xi) {
  // J_r(xi) = J_l(-xi); invert the block upper-triangular form directly.
  const Mat6 jr = se3_left_jacobian(-xi);
  const Mat3 a_inv = so3_left_jacobian_inverse(-Vec3(xi.tail<3>()));
  const Mat3 q = jr.topRightCorner<3, 3>();
  Mat6 inv = Mat6::Zero();
  inv.topLeftCorner<3, 3>() = a_inv;
  inv.topRightCorner<3, 3>() = -a_inv * q * a_inv;
  inv.bottomRightCorner<3, 3>() = a_inv;
  return inv;
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  return so3_log(a.transpose() * b).norm();
}

}  // namespace dynpl
