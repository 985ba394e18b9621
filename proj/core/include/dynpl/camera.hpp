#pragma once

#include <cstdint>
#include <optional>

#include "dynpl/se3.hpp"

namespace dynpl {

using FeatureId = std::int64_t;

/// Calibrated, rectified stereo rig. Pixel coordinates use the usual
/// image convention: u to the right, v down; camera frame x right, y down,
/// z forward.
struct StereoCamera {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double baseline = 0.0;  // meters
  int width = 0;
  int height = 0;

  /// Throws std::invalid_argument when the calibration is unusable.
  void validate() const;

  bool in_image(const Vec2& px, double margin = 0.0) const {
    return px.x() >= margin && px.y() >= margin && px.x() < width - margin &&
           px.y() < height - margin;
  }

  Vec2 project(const Vec3& p_cam) const {
    return {fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy};
  }

  /// Projection into the right camera (shifted by the baseline along x).
  double project_right_u(const Vec3& p_cam) const {
    return fx * (p_cam.x() - baseline) / p_cam.z() + cx;
  }

  Vec2 normalize(const Vec2& px) const { return {(px.x() - cx) / fx, (px.y() - cy) / fy}; }

  Vec3 back_project(const Vec2& px, double depth) const {
    const Vec2 n = normalize(px);
    return {n.x() * depth, n.y() * depth, depth};
  }

  double disparity_for_depth(double depth) const { return fx * baseline / depth; }
};

struct PointFeature2D {
  FeatureId id = 0;
  double u = 0.0;
  double v = 0.0;
  std::optional<double> disparity;  // present when stereo-matched

  Vec2 pixel() const { return {u, v}; }
};

struct LineFeature2D {
  FeatureId id = 0;
  Vec2 start = Vec2::Zero();
  Vec2 end = Vec2::Zero();

  Vec2 midpoint() const { return 0.5 * (start + end); }
  double length() const { return (end - start).norm(); }
};

enum class LandmarkKind { point, line };

/// 3-D landmark. Points use `start` as their position; lines span start..end.
struct Landmark3D {
  LandmarkKind kind = LandmarkKind::point;
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::Zero();

  static Landmark3D point(const Vec3& p) { return {LandmarkKind::point, p, p}; }
  static Landmark3D line(const Vec3& s, const Vec3& e) { return {LandmarkKind::line, s, e}; }

  const Vec3& position() const { return start; }
  /// (l, m, n) = (x2 - x1, y2 - y1, z2 - z1).
  Vec3 direction() const { return end - start; }

  Landmark3D transformed(const PoseSE3& t) const { return {kind, t * start, t * end}; }
};

inline constexpr double kDefaultMinDisparity = 1.0;

/// Stereo triangulation in the left camera frame. Returns nullopt when the
/// disparity is absent or not above `min_disparity`.
std::optional<Vec3> triangulate_point(const PointFeature2D& f, const StereoCamera& cam,
                                      double min_disparity = kDefaultMinDisparity);

/// Endpoint-wise triangulation; the right segment's endpoints are matched to
/// the left ones in order. Each endpoint's depth comes from its horizontal
/// disparity.
std::optional<Landmark3D> triangulate_line(const LineFeature2D& left, const LineFeature2D& right,
                                           const StereoCamera& cam,
                                           double min_disparity = kDefaultMinDisparity);

}  // namespace dynpl
