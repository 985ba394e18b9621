#pragma once

#include <span>
#include <vector>

#include "dynpl/residuals.hpp"

namespace dynpl {

struct PointCorrespondence {
  FeatureId id = 0;
  Vec3 point_ref = Vec3::Zero();  // landmark in the reference frame
  Vec2 observed_px = Vec2::Zero();
};

struct LineCorrespondence {
  FeatureId id = 0;
  Landmark3D line_ref;  // endpoints in the reference frame
  LineFeature2D observed;
};

struct EstimationOptions {
  double huber_delta = 2.0;  // px
  double edge_margin = kDefaultEdgeMargin;
  double initial_lambda = 1e-4;
  double lambda_up = 10.0;
  double lambda_down = 0.5;
  int max_iterations = 30;
  double step_tolerance = 1e-8;
  double cost_tolerance = 1e-9;  // relative
  bool use_lines = true;
  bool use_horizontal = true;
  double information = 1.0;  // uniform scalar information for every block
};

enum class EstimationStatus { converged, max_iterations, tracking_lost };

struct PoseEstimate {
  PoseSE3 camera_from_ref;
  EstimationStatus status = EstimationStatus::tracking_lost;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  std::size_t point_blocks = 0;
  std::size_t line_vertical_blocks = 0;
  std::size_t line_horizontal_blocks = 0;
  // Robust weights at the returned pose, parallel to the inputs; zero for a
  // dropped block. Lines report the weight of their vertical block.
  std::vector<double> point_weights;
  std::vector<double> line_weights;

  bool ok() const { return status != EstimationStatus::tracking_lost; }
  std::size_t block_count() const { return point_blocks + line_vertical_blocks + line_horizontal_blocks; }
};

/// Huber cost of a block with squared (information-weighted) norm s.
double huber_cost(double squared_norm, double delta);
/// IRLS weight d(cost)/ds matching huber_cost.
double huber_weight(double squared_norm, double delta);

/// Robust cost of all usable blocks at a given pose.
double pose_cost(std::span<const PointCorrespondence> points, std::span<const LineCorrespondence> lines,
                 const PoseSE3& camera_from_ref, const StereoCamera& cam,
                 const EstimationOptions& options = {});

/// Levenberg-Marquardt over the point, line-vertical and line-horizontal
/// blocks starting from `initial`. Fewer than 3 usable blocks or a rank
/// deficient system yields tracking_lost and the initial pose.
PoseEstimate estimate_pose(std::span<const PointCorrespondence> points,
                           std::span<const LineCorrespondence> lines, const PoseSE3& initial,
                           const StereoCamera& cam, const EstimationOptions& options = {});

}  // namespace dynpl
