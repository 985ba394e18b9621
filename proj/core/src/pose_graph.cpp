#include "dynpl/pose_graph.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace dynpl {

namespace {

constexpr double kMaxLambda = 1e12;

}  // namespace

Vec6 pose_graph_residual(const PoseGraphEdge& edge, const PoseSE3& ti, const PoseSE3& tj) {
  return se3_log(edge.measurement.inverse() * ti.inverse() * tj);
}

void pose_graph_jacobians(const PoseGraphEdge& edge, const PoseSE3& ti, const PoseSE3& tj, Mat6& d_from,
                          Mat6& d_to) {
  const Vec6 e = pose_graph_residual(edge, ti, tj);
  const Mat6 jr_inv = se3_right_jacobian_inverse(e);
  d_to = jr_inv;
  d_from = -jr_inv * (tj.inverse() * ti).adjoint();
}

double pose_graph_cost(const PoseGraph& graph) {
  double cost = 0.0;
  for (const auto& e : graph.edges) {
    const Vec6 r = pose_graph_residual(e, graph.poses[e.from], graph.poses[e.to]);
    cost += r.dot(e.information * r);
  }
  return cost;
}

PGOReport optimize_pose_graph(PoseGraph& graph, const PGOOptions& options) {
  PGOReport report;
  const std::size_t n = graph.poses.size();
  std::vector<int> index(n, -1);
  int free_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool fixed = i < graph.fixed.size() && graph.fixed[i];
    if (!fixed) index[i] = free_count++;
  }

  double cost = pose_graph_cost(graph);
  report.initial_cost = cost;
  report.final_cost = cost;
  if (!std::isfinite(cost)) {
    report.diverged = true;
    return report;
  }
  if (free_count == 0 || cost == 0.0) return report;

  auto linearize = [&](const PoseGraph& g, Eigen::MatrixXd& H, Eigen::VectorXd& b) {
    H.setZero(6 * free_count, 6 * free_count);
    b.setZero(6 * free_count);
    for (const auto& e : g.edges) {
      const PoseSE3& ti = g.poses[e.from];
      const PoseSE3& tj = g.poses[e.to];
      const Vec6 r = pose_graph_residual(e, ti, tj);
      Mat6 ji;
      Mat6 jj;
      pose_graph_jacobians(e, ti, tj, ji, jj);
      const int a = index[e.from];
      const int c = index[e.to];
      if (a >= 0) {
        H.block<6, 6>(6 * a, 6 * a).noalias() += ji.transpose() * e.information * ji;
        b.segment<6>(6 * a).noalias() += ji.transpose() * e.information * r;
      }
      if (c >= 0) {
        H.block<6, 6>(6 * c, 6 * c).noalias() += jj.transpose() * e.information * jj;
        b.segment<6>(6 * c).noalias() += jj.transpose() * e.information * r;
      }
      if (a >= 0 && c >= 0) {
        const Mat6 hij = ji.transpose() * e.information * jj;
        H.block<6, 6>(6 * a, 6 * c) += hij;
        H.block<6, 6>(6 * c, 6 * a) += hij.transpose();
      }
    }
  };

  Eigen::MatrixXd H;
  Eigen::VectorXd b;
  linearize(graph, H, b);
  double lambda = options.initial_lambda;
  bool solved_once = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    report.iterations = it + 1;
    Eigen::MatrixXd A = H;
    A.diagonal() += lambda * H.diagonal();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    Eigen::VectorXd delta;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) delta = ldlt.solve(-b);
    if (delta.size() == 0 || !delta.allFinite()) {
      lambda *= options.lambda_up;
      if (lambda > kMaxLambda) break;
      continue;
    }
    solved_once = true;
    PoseGraph candidate = graph;
    for (std::size_t i = 0; i < n; ++i) {
      if (index[i] < 0) continue;
      candidate.poses[i] = (graph.poses[i] * se3_exp(delta.segment<6>(6 * index[i]))).normalized();
    }
    const double next = pose_graph_cost(candidate);
    if (std::isfinite(next) && next < cost) {
      const double rel = (cost - next) / cost;
      graph = std::move(candidate);
      cost = next;
      report.accepted_costs.push_back(cost);
      lambda *= options.lambda_down;
      if (delta.norm() < options.step_tolerance || rel < options.cost_tolerance || cost == 0.0) break;
      linearize(graph, H, b);
    } else {
      if (delta.norm() < options.step_tolerance) break;
      lambda *= options.lambda_up;
      if (lambda > kMaxLambda) break;
    }
  }
  if (!solved_once) report.diverged = true;
  report.final_cost = cost;
  return report;
}

}  // namespace dynpl
