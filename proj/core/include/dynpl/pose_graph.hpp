#pragma once

#include <vector>

#include "dynpl/se3.hpp"

namespace dynpl {

enum class PoseGraphEdgeKind { odometry, covisibility, loop };

/// Relative constraint Z ~ Ti^-1 * Tj between world_from_camera poses.
struct PoseGraphEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  PoseSE3 measurement;
  Mat6 information = Mat6::Identity();
  PoseGraphEdgeKind kind = PoseGraphEdgeKind::odometry;
};

struct PoseGraph {
  std::vector<PoseSE3> poses;  // world_from_camera
  std::vector<bool> fixed;
  std::vector<PoseGraphEdge> edges;
};

struct PGOOptions {
  double initial_lambda = 1e-4;
  double lambda_up = 10.0;
  double lambda_down = 0.5;
  int max_iterations = 50;
  double step_tolerance = 1e-10;
  double cost_tolerance = 1e-14;  // relative
};

struct PGOReport {
  bool diverged = false;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  std::vector<double> accepted_costs;
};

/// e = log(Z^-1 * Ti^-1 * Tj) in (rho, omega) ordering.
Vec6 pose_graph_residual(const PoseGraphEdge& edge, const PoseSE3& ti, const PoseSE3& tj);

/// Jacobians of the residual w.r.t. right increments Ti <- Ti exp(di), Tj <- Tj exp(dj).
void pose_graph_jacobians(const PoseGraphEdge& edge, const PoseSE3& ti, const PoseSE3& tj, Mat6& d_from,
                          Mat6& d_to);

/// Sum over edges of e^T * information * e.
double pose_graph_cost(const PoseGraph& graph);

/// Levenberg-Marquardt over the free poses. On divergence (non-finite state
/// or no solvable step) the graph is left unchanged and `diverged` is set.
PGOReport optimize_pose_graph(PoseGraph& graph, const PGOOptions& options = {});

}  // namespace dynpl
