#include <doctest.h>

#include <cmath>
#include <random>

#include "dynpl/se3.hpp"

using namespace dynpl;

namespace {

Vec6 random_twist(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec6 xi;
  for (int i = 0; i < 6; ++i) xi[i] = u(rng);
  return xi;
}

// Rodrigues written out directly, as an independent reference.
Mat3 rodrigues(const Vec3& w) {
  const double th = w.norm();
  if (th < 1e-12) return Mat3::Identity();
  const Vec3 k = w / th;
  Mat3 K;
  K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  return Mat3::Identity() + std::sin(th) * K + (1 - std::cos(th)) * K * K;
}

}  // namespace

TEST_SUITE("se3") {
  TEST_CASE("hat matches the cross product") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
      const Vec6 r = random_twist(rng, 3.0);
      const Vec3 a = r.head<3>(), b = r.tail<3>();
      CHECK((hat(a) * b - a.cross(b)).norm() < 1e-14);
    }
  }

  TEST_CASE("so3_exp agrees with Rodrigues and log inverts it") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
      const Vec3 w = random_twist(rng, 1.5).tail<3>();
      CHECK((so3_exp(w) - rodrigues(w)).norm() < 1e-12);
      CHECK((so3_log(so3_exp(w)) - w).norm() < 1e-10);
    }
  }

  TEST_CASE("so3_log at a half turn picks the positive dominant axis") {
    const Vec3 w = so3_log(so3_exp(Vec3(0.0, -M_PI, 0.0)));
    CHECK(std::abs(w.norm() - M_PI) < 1e-9);
    CHECK(w.y() > 0.0);
  }

  TEST_CASE("se3 exp and log round trip, including tiny angles") {
    std::mt19937_64 rng(3);
    for (double scale : {1e-9, 1e-4, 0.5, 2.0}) {
      for (int i = 0; i < 50; ++i) {
        const Vec6 xi = random_twist(rng, scale);
        CHECK((se3_log(se3_exp(xi)) - xi).norm() < 1e-9 * std::max(1.0, xi.norm()));
      }
    }
  }

  TEST_CASE("exp of a pure translation is a translation") {
    Vec6 xi = Vec6::Zero();
    xi.head<3>() = Vec3(1.0, -2.0, 0.5);
    const PoseSE3 t = se3_exp(xi);
    CHECK((t.translation() - Vec3(1.0, -2.0, 0.5)).norm() < 1e-15);
    CHECK((t.rotation() - Mat3::Identity()).norm() < 1e-15);
  }

  TEST_CASE("composition, inverse and matrix form agree") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 50; ++i) {
      const PoseSE3 a = se3_exp(random_twist(rng, 1.0));
      const PoseSE3 b = se3_exp(random_twist(rng, 1.0));
      CHECK(((a * b).matrix() - a.matrix() * b.matrix()).norm() < 1e-12);
      CHECK(((a * a.inverse()).matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-12);
      const PoseSE3 q = PoseSE3::from_quaternion(a.quaternion(), a.translation());
      CHECK((q.matrix() - a.matrix()).norm() < 1e-12);
      CHECK((PoseSE3::from_matrix(a.matrix()).matrix() - a.matrix()).norm() < 1e-15);
    }
  }

  TEST_CASE("adjoint transports twists by conjugation") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
      const PoseSE3 t = se3_exp(random_twist(rng, 1.0));
      const Vec6 xi = random_twist(rng, 0.3);
      const Vec6 lhs = t.adjoint() * xi;
      const Vec6 rhs = se3_log(t * se3_exp(xi) * t.inverse());
      CHECK((lhs - rhs).norm() < 1e-10);
    }
  }

  TEST_CASE("left Jacobian matches finite differences of exp") {
    std::mt19937_64 rng(6);
    const double h = 1e-6;
    for (int i = 0; i < 30; ++i) {
      const Vec6 xi = random_twist(rng, 1.0);
      const Mat6 J = se3_left_jacobian(xi);
      for (int k = 0; k < 6; ++k) {
        Vec6 d = Vec6::Zero();
        d[k] = h;
        // exp(xi + d) = exp(J d) exp(xi) to first order.
        const Vec6 plus = se3_log(se3_exp(xi + d) * se3_exp(xi).inverse());
        const Vec6 minus = se3_log(se3_exp(xi - d) * se3_exp(xi).inverse());
        const Vec6 fd = (plus - minus) / (2 * h);
        CHECK((fd - J.col(k)).norm() < 1e-7);
      }
    }
  }

  TEST_CASE("inverse right Jacobian matches finite differences of log") {
    std::mt19937_64 rng(7);
    const double h = 1e-6;
    for (int i = 0; i < 30; ++i) {
      const Vec6 xi = random_twist(rng, 1.0);
      const Mat6 Jinv = se3_right_jacobian_inverse(xi);
      for (int k = 0; k < 6; ++k) {
        Vec6 d = Vec6::Zero();
        d[k] = h;
        const Vec6 fd = (se3_log(se3_exp(xi) * se3_exp(d)) - se3_log(se3_exp(xi) * se3_exp(-d))) / (2 * h);
        CHECK((fd - Jinv.col(k)).norm() < 1e-7);
      }
    }
  }

  TEST_CASE("rotation angle between rotations") {
    const Mat3 a = so3_exp(Vec3(0.1, 0.2, -0.3));
    const Mat3 b = a * so3_exp(Vec3(0.0, 0.0, 0.25));
    CHECK(rotation_angle_between(a, b) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(rotation_angle_between(a, a) == doctest::Approx(0.0));
  }

  TEST_CASE("orthonormalize repairs drift") {
    Mat3 r = so3_exp(Vec3(0.3, -0.2, 0.9));
    r(0, 1) += 1e-6;
    const Mat3 o = orthonormalize(r);
    CHECK((o.transpose() * o - Mat3::Identity()).norm() < 1e-14);
    CHECK(o.determinant() == doctest::Approx(1.0));
    CHECK((o - r).norm() < 1e-5);
  }
}
