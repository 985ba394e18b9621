#include "dynpl/residuals.hpp"

#include <cmath>

namespace dynpl {

namespace {

constexpr double kMinDepth = 1e-6;
constexpr double kMinLineLength = 1e-12;

// d(x/z, y/z) / d(x, y, z)
Mat23 normalized_projection_jacobian(const Vec3& p) {
  const double iz = 1.0 / p.z();
  Mat23 j;
  j << iz, 0.0, -p.x() * iz * iz, 0.0, iz, -p.y() * iz * iz;
  return j;
}

// d(T * p) / d(delta) for T <- exp(delta) * T, evaluated at the camera point.
Eigen::Matrix<double, 3, 6> camera_point_pose_jacobian(const Vec3& p_cam) {
  Eigen::Matrix<double, 3, 6> j;
  j.leftCols<3>().setIdentity();
  j.rightCols<3>() = -hat(p_cam);
  return j;
}

struct ProjectedLine {
  Vec3 start_cam;
  Vec3 end_cam;
  NormalizedLine line;
};

std::optional<ProjectedLine> project_line(const Landmark3D& line_ref, const PoseSE3& camera_from_ref) {
  const Vec3 s = camera_from_ref * line_ref.start;
  const Vec3 e = camera_from_ref * line_ref.end;
  if (s.z() <= kMinDepth || e.z() <= kMinDepth) return std::nullopt;
  return ProjectedLine{s, e, NormalizedLine::through(s.head<2>() / s.z(), e.head<2>() / e.z())};
}

}  // namespace

std::optional<VerticalDistances> vertical_distances(const NormalizedLine& p, const Vec2& ds,
                                                    const Vec2& de) {
  const double n2 = p.l * p.l + p.m * p.m;
  if (n2 <= kMinLineLength) return std::nullopt;
  const double n = std::sqrt(n2);
  const double x2 = p.x1 + p.l;
  const double y2 = p.y1 + p.m;
  const double as = ds.x() - p.x1;
  const double bs = ds.y() - p.y1;
  const double ae = de.x() - x2;
  const double be = de.y() - y2;
  const double cs = as * p.m - bs * p.l;
  const double ce = ae * p.m - be * p.l;

  const Mat14 dn{-p.l / n, -p.m / n, p.l / n, p.m / n};
  const Mat14 dcs{-p.m + bs, p.l - as, -bs, as};
  const Mat14 dce{be, -ae, -p.m - be, p.l + ae};

  VerticalDistances out;
  out.value = {cs / n, ce / n};
  out.d_endpoints.row(0) = dcs / n - cs * dn / n2;
  out.d_endpoints.row(1) = dce / n - ce * dn / n2;
  return out;
}

std::optional<HorizontalDisplacement> horizontal_displacement(const NormalizedLine& p, const Vec2& ds,
                                                              const Vec2& de) {
  const double n2 = p.l * p.l + p.m * p.m;
  if (n2 <= kMinLineLength) return std::nullopt;
  const double n = std::sqrt(n2);
  const double x2 = p.x1 + p.l;
  const double y2 = p.y1 + p.m;
  const double as = ds.x() - p.x1;
  const double bs = ds.y() - p.y1;
  const double ae = de.x() - x2;
  const double be = de.y() - y2;
  const double c = (as + ae) * p.l + (bs + be) * p.m;

  const Mat14 dn{-p.l / n, -p.m / n, p.l / n, p.m / n};
  const Mat14 dc{-p.l - as - ae, -p.m - bs - be, -p.l + as + ae, -p.m + bs + be};

  HorizontalDisplacement out;
  out.value = c / (2.0 * n);
  out.d_endpoints = dc / (2.0 * n) - c * dn / (2.0 * n2);
  return out;
}

std::optional<PointResidual> point_residual(const Vec3& point_ref, const Vec2& observed_px,
                                            const PoseSE3& camera_from_ref, const StereoCamera& cam) {
  const Vec3 p = camera_from_ref * point_ref;
  if (p.z() <= kMinDepth) return std::nullopt;
  const Vec2 projected = p.head<2>() / p.z();
  const Vec2 observed = cam.normalize(observed_px);
  const Mat23 jn = normalized_projection_jacobian(p);

  PointResidual r;
  r.value = cam.fx * (observed - projected);
  r.d_pose = -cam.fx * jn * camera_point_pose_jacobian(p);
  r.d_point = -cam.fx * jn * camera_from_ref.rotation();
  return r;
}

std::optional<RightPointResidual> right_point_residual(const Vec3& point_ref, double observed_right_u,
                                                       const PoseSE3& camera_from_ref,
                                                       const StereoCamera& cam) {
  const Vec3 p = camera_from_ref * point_ref;
  if (p.z() <= kMinDepth) return std::nullopt;
  const double iz = 1.0 / p.z();
  const double projected = (p.x() - cam.baseline) * iz;
  const double observed = (observed_right_u - cam.cx) / cam.fx;
  const Mat13 jn{iz, 0.0, -(p.x() - cam.baseline) * iz * iz};

  RightPointResidual r;
  r.value = cam.fx * (observed - projected);
  r.d_pose = -cam.fx * jn * camera_point_pose_jacobian(p);
  r.d_point = -cam.fx * jn * camera_from_ref.rotation();
  return r;
}

std::optional<LineVerticalResidual> line_vertical_residual(const Landmark3D& line_ref,
                                                           const LineFeature2D& detected,
                                                           const PoseSE3& camera_from_ref,
                                                           const StereoCamera& cam) {
  const auto proj = project_line(line_ref, camera_from_ref);
  if (!proj) return std::nullopt;
  const auto d = vertical_distances(proj->line, cam.normalize(detected.start), cam.normalize(detected.end));
  if (!d) return std::nullopt;

  const Mat23 js = normalized_projection_jacobian(proj->start_cam);
  const Mat23 je = normalized_projection_jacobian(proj->end_cam);
  const Eigen::Matrix<double, 2, 2> ds = d->d_endpoints.leftCols<2>();
  const Eigen::Matrix<double, 2, 2> de = d->d_endpoints.rightCols<2>();
  const Mat3& R = camera_from_ref.rotation();

  LineVerticalResidual r;
  r.value = cam.fx * d->value;
  r.d_pose = cam.fx * (ds * js * camera_point_pose_jacobian(proj->start_cam) +
                       de * je * camera_point_pose_jacobian(proj->end_cam));
  r.d_line.leftCols<3>() = cam.fx * ds * js * R;
  r.d_line.rightCols<3>() = cam.fx * de * je * R;
  return r;
}

bool endpoints_clear_of_edges(const LineFeature2D& detected, const StereoCamera& cam, double edge_margin) {
  auto clear = [&](const Vec2& px) {
    return px.x() > edge_margin && px.y() > edge_margin && px.x() < cam.width - 1 - edge_margin &&
           px.y() < cam.height - 1 - edge_margin;
  };
  return clear(detected.start) && clear(detected.end);
}

std::optional<LineHorizontalResidual> line_horizontal_residual(const Landmark3D& line_ref,
                                                               const LineFeature2D& detected,
                                                               const PoseSE3& camera_from_ref,
                                                               const StereoCamera& cam,
                                                               double edge_margin) {
  if (!endpoints_clear_of_edges(detected, cam, edge_margin)) return std::nullopt;
  const auto proj = project_line(line_ref, camera_from_ref);
  if (!proj) return std::nullopt;
  const auto h =
      horizontal_displacement(proj->line, cam.normalize(detected.start), cam.normalize(detected.end));
  if (!h) return std::nullopt;

  const Mat23 js = normalized_projection_jacobian(proj->start_cam);
  const Mat23 je = normalized_projection_jacobian(proj->end_cam);
  const Eigen::Matrix<double, 1, 2> hs = h->d_endpoints.leftCols<2>();
  const Eigen::Matrix<double, 1, 2> he = h->d_endpoints.rightCols<2>();
  const Mat3& R = camera_from_ref.rotation();

  LineHorizontalResidual r;
  r.value = cam.fx * h->value;
  r.d_pose = cam.fx * (hs * js * camera_point_pose_jacobian(proj->start_cam) +
                       he * je * camera_point_pose_jacobian(proj->end_cam));
  r.d_line.leftCols<3>() = cam.fx * hs * js * R;
  r.d_line.rightCols<3>() = cam.fx * he * je * R;
  return r;
}

}  // namespace dynpl
