#pragma once

#include <optional>

#include "dynpl/camera.hpp"

namespace dynpl {

// Residuals are formed on the normalized image plane and scaled by fx so
// every block is in pixel units. Pose Jacobians are taken w.r.t. a left
// increment on `camera_from_ref`: T <- exp(delta) * T, delta = (rho, omega).

using Mat26 = Eigen::Matrix<double, 2, 6>;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat16 = Eigen::Matrix<double, 1, 6>;
using Mat13 = Eigen::Matrix<double, 1, 3>;
using Mat24 = Eigen::Matrix<double, 2, 4>;
using Mat14 = Eigen::Matrix<double, 1, 4>;

/// Line on the plane z = 1: start (x1, y1) and direction (l, m) = end - start.
struct NormalizedLine {
  double x1 = 0.0;
  double y1 = 0.0;
  double l = 0.0;
  double m = 0.0;

  static NormalizedLine through(const Vec2& start, const Vec2& end) {
    return {start.x(), start.y(), end.x() - start.x(), end.y() - start.y()};
  }
  Vec2 start() const { return {x1, y1}; }
  Vec2 end() const { return {x1 + l, y1 + m}; }
};

/// Signed distances of the detected endpoints to a projected line,
///   d_s = ([xs - x1, ys - y1] x [l, m]) / sqrt(l^2 + m^2)
///   d_e = ([xe - x2, ye - y2] x [l, m]) / sqrt(l^2 + m^2)
/// with a x b = a.x * b.y - a.y * b.x. A detected point to the left of the
/// projected direction (in image axes, v down) gets a negative distance:
/// line (0,0)->(2,0) and detected (1,1) give -1.
/// `d_endpoints` is the exact derivative w.r.t. (x1, y1, x2, y2), including
/// the dependence of (l, m) on the projected endpoints.
struct VerticalDistances {
  Vec2 value = Vec2::Zero();
  Mat24 d_endpoints = Mat24::Zero();
};
std::optional<VerticalDistances> vertical_distances(const NormalizedLine& projected,
                                                    const Vec2& detected_start,
                                                    const Vec2& detected_end);

/// Along-line endpoint displacement: the mean of the two endpoint offsets
/// (detected - projected) projected on the unit direction (l, m)/|(l, m)|.
struct HorizontalDisplacement {
  double value = 0.0;
  Mat14 d_endpoints = Mat14::Zero();
};
std::optional<HorizontalDisplacement> horizontal_displacement(const NormalizedLine& projected,
                                                              const Vec2& detected_start,
                                                              const Vec2& detected_end);

struct PointResidual {
  Vec2 value = Vec2::Zero();
  Mat26 d_pose = Mat26::Zero();
  Mat23 d_point = Mat23::Zero();
};

/// observed - projected; nullopt when the point is behind the camera.
std::optional<PointResidual> point_residual(const Vec3& point_ref, const Vec2& observed_px,
                                            const PoseSE3& camera_from_ref, const StereoCamera& cam);

struct RightPointResidual {
  double value = 0.0;
  Mat16 d_pose = Mat16::Zero();
  Mat13 d_point = Mat13::Zero();
};

/// Right-image horizontal residual for a stereo observation (observed right
/// u = u - disparity). Fixes scale in bundle adjustment.
std::optional<RightPointResidual> right_point_residual(const Vec3& point_ref, double observed_right_u,
                                                       const PoseSE3& camera_from_ref,
                                                       const StereoCamera& cam);

struct LineVerticalResidual {
  Vec2 value = Vec2::Zero();
  Mat26 d_pose = Mat26::Zero();
  Mat26 d_line = Mat26::Zero();  // w.r.t. (start, end) in the reference frame
};

std::optional<LineVerticalResidual> line_vertical_residual(const Landmark3D& line_ref,
                                                           const LineFeature2D& detected,
                                                           const PoseSE3& camera_from_ref,
                                                           const StereoCamera& cam);

struct LineHorizontalResidual {
  double value = 0.0;
  Mat16 d_pose = Mat16::Zero();
  Mat16 d_line = Mat16::Zero();
};

inline constexpr double kDefaultEdgeMargin = 20.0;

bool endpoints_clear_of_edges(const LineFeature2D& detected, const StereoCamera& cam,
                              double edge_margin = kDefaultEdgeMargin);

/// nullopt when either detected endpoint lies within `edge_margin` of the
/// image border, or the projection degenerates.
std::optional<LineHorizontalResidual> line_horizontal_residual(const Landmark3D& line_ref,
                                                               const LineFeature2D& detected,
                                                               const PoseSE3& camera_from_ref,
                                                               const StereoCamera& cam,
                                                               double edge_margin = kDefaultEdgeMargin);

}  // namespace dynpl
