#include "dynpl/camera.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dynpl {

void StereoCamera::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("invalid stereo calibration: " + what);
  };
  if (!(fx > 0.0) || !(fy > 0.0)) fail("focal lengths must be positive");
  if (!(baseline > 0.0)) fail("baseline must be positive");
  if (width <= 0 || height <= 0) fail("image size must be positive");
  if (!(cx > 0.0 && cx < width)) fail("cx outside image");
  if (!(cy > 0.0 && cy < height)) fail("cy outside image");
}

std::optional<Vec3> triangulate_point(const PointFeature2D& f, const StereoCamera& cam,
                                      double min_disparity) {
  if (!f.disparity || !std::isfinite(*f.disparity) || *f.disparity <= min_disparity) {
    return std::nullopt;
  }
  const double depth = cam.fx * cam.baseline / *f.disparity;
  return cam.back_project(f.pixel(), depth);
}

std::optional<Landmark3D> triangulate_line(const LineFeature2D& left, const LineFeature2D& right,
                                           const StereoCamera& cam, double min_disparity) {
  const PointFeature2D s{left.id, left.start.x(), left.start.y(), left.start.x() - right.start.x()};
  const PointFeature2D e{left.id, left.end.x(), left.end.y(), left.end.x() - right.end.x()};
  const auto ps = triangulate_point(s, cam, min_disparity);
  const auto pe = triangulate_point(e, cam, min_disparity);
  if (!ps || !pe) return std::nullopt;
  if ((*pe - *ps).squaredNorm() <= 0.0) return std::nullopt;
  return Landmark3D::line(*ps, *pe);
}

}  // namespace dynpl
