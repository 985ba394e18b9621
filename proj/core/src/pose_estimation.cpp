#include "dynpl/pose_estimation.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace dynpl {

namespace {

constexpr double kRankTolerance = 1e-10;
constexpr double kMaxLambda = 1e12;

struct NormalEquations {
  Mat6 H = Mat6::Zero();
  Vec6 g = Vec6::Zero();
  double cost = 0.0;
  std::size_t points = 0;
  std::size_t verticals = 0;
  std::size_t horizontals = 0;
};

template <int Rows>
void accumulate(NormalEquations& ne, const Eigen::Matrix<double, Rows, 1>& r,
                const Eigen::Matrix<double, Rows, 6>& J, const EstimationOptions& o, bool with_jacobian,
                double* weight_out) {
  const double s = o.information * r.squaredNorm();
  ne.cost += huber_cost(s, o.huber_delta);
  const double w = o.information * huber_weight(s, o.huber_delta);
  if (weight_out) *weight_out = huber_weight(s, o.huber_delta);
  if (!with_jacobian) return;
  ne.H.noalias() += w * J.transpose() * J;
  ne.g.noalias() += w * J.transpose() * r;
}

NormalEquations build(std::span<const PointCorrespondence> points, std::span<const LineCorrespondence> lines,
                      const PoseSE3& pose, const StereoCamera& cam, const EstimationOptions& o,
                      bool with_jacobian, PoseEstimate* weights) {
  NormalEquations ne;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double* w = weights ? &weights->point_weights[i] : nullptr;
    if (w) *w = 0.0;
    const auto r = point_residual(points[i].point_ref, points[i].observed_px, pose, cam);
    if (!r) continue;
    accumulate<2>(ne, r->value, r->d_pose, o, with_jacobian, w);
    ++ne.points;
  }
  if (!o.use_lines) return ne;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    double* w = weights ? &weights->line_weights[i] : nullptr;
    if (w) *w = 0.0;
    const auto& lc = lines[i];
    const auto v = line_vertical_residual(lc.line_ref, lc.observed, pose, cam);
    if (!v) continue;
    accumulate<2>(ne, v->value, v->d_pose, o, with_jacobian, w);
    ++ne.verticals;
    if (!o.use_horizontal) continue;
    const auto h = line_horizontal_residual(lc.line_ref, lc.observed, pose, cam, o.edge_margin);
    if (!h) continue;
    accumulate<1>(ne, Eigen::Matrix<double, 1, 1>(h->value), h->d_pose, o, with_jacobian, nullptr);
    ++ne.horizontals;
  }
  return ne;
}

bool rank_deficient(const Mat6& H) {
  Eigen::SelfAdjointEigenSolver<Mat6> es(H, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return !(ev(5) > 0.0) || ev(0) <= kRankTolerance * ev(5);
}

}  // namespace

double huber_cost(double s, double delta) {
  const double r = std::sqrt(s);
  return r <= delta ? s : 2.0 * delta * r - delta * delta;
}

double huber_weight(double s, double delta) {
  const double r = std::sqrt(s);
  return r <= delta ? 1.0 : delta / r;
}

double pose_cost(std::span<const PointCorrespondence> points, std::span<const LineCorrespondence> lines,
                 const PoseSE3& camera_from_ref, const StereoCamera& cam, const EstimationOptions& options) {
  return build(points, lines, camera_from_ref, cam, options, false, nullptr).cost;
}

PoseEstimate estimate_pose(std::span<const PointCorrespondence> points,
                           std::span<const LineCorrespondence> lines, const PoseSE3& initial,
                           const StereoCamera& cam, const EstimationOptions& options) {
  PoseEstimate out;
  out.camera_from_ref = initial;
  out.point_weights.assign(points.size(), 0.0);
  out.line_weights.assign(lines.size(), 0.0);

  PoseSE3 pose = initial;
  NormalEquations ne = build(points, lines, pose, cam, options, true, nullptr);
  out.point_blocks = ne.points;
  out.line_vertical_blocks = ne.verticals;
  out.line_horizontal_blocks = ne.horizontals;
  out.initial_cost = ne.cost;
  out.final_cost = ne.cost;
  if (out.block_count() < 3 || rank_deficient(ne.H)) {
    out.status = EstimationStatus::tracking_lost;
    return out;
  }

  double lambda = options.initial_lambda;
  out.status = EstimationStatus::max_iterations;
  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    if (ne.cost == 0.0) {
      out.status = EstimationStatus::converged;
      break;
    }
    Mat6 A = ne.H;
    A.diagonal() += lambda * ne.H.diagonal();
    const Vec6 delta = A.ldlt().solve(-ne.g);
    if (!delta.allFinite()) {
      out.status = EstimationStatus::tracking_lost;
      return out;
    }
    const PoseSE3 candidate = (se3_exp(delta) * pose).normalized();
    NormalEquations next = build(points, lines, candidate, cam, options, true, nullptr);
    if (next.cost < ne.cost) {
      const double rel = (ne.cost - next.cost) / ne.cost;
      pose = candidate;
      ne = next;
      lambda *= options.lambda_down;
      if (delta.norm() < options.step_tolerance || rel < options.cost_tolerance) {
        out.status = EstimationStatus::converged;
        break;
      }
    } else {
      if (delta.norm() < options.step_tolerance) {
        out.status = EstimationStatus::converged;
        break;
      }
      lambda *= options.lambda_up;
      if (lambda > kMaxLambda) {
        out.status = EstimationStatus::converged;
        break;
      }
    }
  }

  out.camera_from_ref = pose;
  out.final_cost = ne.cost;
  build(points, lines, pose, cam, options, false, &out);
  return out;
}

}  // namespace dynpl
