#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynpl/residuals.hpp"

namespace dynpl {

struct BAPointObservation {
  std::size_t pose = 0;
  std::size_t landmark = 0;
  Vec2 px = Vec2::Zero();
  std::optional<double> right_u;  // adds a right-image residual when present
};

struct BALineObservation {
  std::size_t pose = 0;
  std::size_t landmark = 0;
  LineFeature2D observed;
  std::optional<LineFeature2D> right;  // adds right-image endpoint distances when present
};

/// Poses are camera_from_world; landmarks live in the world frame. Line
/// landmarks are parameterized by both endpoints.
struct BAProblem {
  std::vector<PoseSE3> poses;
  std::vector<bool> pose_fixed;
  std::vector<Vec3> points;
  std::vector<Landmark3D> lines;
  std::vector<BAPointObservation> point_observations;
  std::vector<BALineObservation> line_observations;
};

struct BAOptions {
  double huber_delta = 2.0;
  bool robust = true;
  bool use_horizontal = true;
  double edge_margin = kDefaultEdgeMargin;
  double initial_lambda = 1e-4;
  double lambda_up = 10.0;
  double lambda_down = 0.5;
  int max_iterations = 30;
  double step_tolerance = 1e-8;
  double cost_tolerance = 1e-12;  // relative
  double null_damping = 1e-9;     // keeps unobservable line stretch directions finite
};

struct BAReport {
  bool ran = false;
  std::string diagnostic;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  std::vector<double> accepted_costs;  // cost after every accepted step
};

double ba_cost(const BAProblem& problem, const StereoCamera& cam, const BAOptions& options = {});

/// Root mean square over every scalar residual component (pixels).
double reprojection_rms(const BAProblem& problem, const StereoCamera& cam, const BAOptions& options = {});

/// Levenberg-Marquardt with the landmark blocks eliminated by a Schur
/// complement; the reduced pose system is solved densely. Fixed poses are
/// never written. Without any free pose or landmark, or when the reduced
/// system is singular, returns ran=false and leaves the problem untouched.
BAReport bundle_adjust(BAProblem& problem, const StereoCamera& cam, const BAOptions& options = {});

}  // namespace dynpl
