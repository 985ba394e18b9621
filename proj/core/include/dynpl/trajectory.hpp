#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dynpl/se3.hpp"

namespace dynpl {

struct StampedPose {
  double timestamp = 0.0;
  PoseSE3 world_from_camera;
};

using Trajectory = std::vector<StampedPose>;

/// TUM lines `timestamp tx ty tz qx qy qz qw`.
void write_tum(std::ostream& out, const Trajectory& trajectory);
void write_tum_file(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory parse_tum(std::istream& in, const std::string& source);
Trajectory read_tum_file(const std::filesystem::path& path);

struct TrajectoryMetrics {
  double ate_rmse = 0.0;           // meters
  double rotation_rmse_deg = 0.0;  // degrees
  std::vector<double> translation_errors;
  std::vector<double> rotation_errors_deg;
};

inline constexpr double kTimestampTolerance = 1e-6;

/// Aligns the estimate to the ground truth on the first pose, then takes the
/// RMSE of position and rotation errors over the remaining frames (the
/// alignment frame is exact by construction and is not counted). Throws
/// InputError(trajectory_mismatch) on a length or timestamp mismatch.
TrajectoryMetrics evaluate_trajectory(const Trajectory& estimated, const Trajectory& ground_truth);

}  // namespace dynpl
