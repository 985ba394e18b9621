#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "dynpl/association.hpp"

namespace dynpl {

inline constexpr double kDefaultTauPoint = 4.0;  // px^2
inline constexpr double kDefaultRhoLine = 4.0;   // px^2

/// Constant-velocity prior: `previous_from_pprevious` maps camera coordinates
/// of the frame before the previous one into the previous frame. Applied once
/// more, it predicts previous -> current.
struct MotionModel {
  PoseSE3 previous_from_pprevious;
};

/// Predicted current-frame pixel of a point given in previous-camera
/// coordinates; nullopt if the prediction falls behind the camera.
std::optional<Vec2> predict_point(const Vec3& prev_camera_point, const MotionModel& model,
                                  const StereoCamera& cam);

struct DynamicGridMap {
  std::vector<bool> flagged = std::vector<bool>(kPointGridCols * kPointGridRows, false);
  std::vector<double> mean_sq_error = std::vector<double>(kPointGridCols * kPointGridRows, 0.0);
  std::vector<int> counts = std::vector<int>(kPointGridCols * kPointGridRows, 0);
  std::vector<bool> over_threshold = std::vector<bool>(kPointGridCols * kPointGridRows, false);

  bool is_dynamic(const GridIndex& g) const { return flagged[g.linear()]; }
  bool is_dynamic(const Vec2& px, int width, int height) const {
    return is_dynamic(point_grid_cell(px, width, height));
  }
  std::size_t flagged_count() const;
};

/// Mean squared prediction error per current-frame cell; cells above
/// tau_pt are flagged together with their 8-neighbourhood. Matches whose
/// previous observation lacks a usable disparity are skipped.
DynamicGridMap detect_dynamic_grids(std::span<const PointMatch> matches, const MotionModel& model,
                                    const StereoCamera& cam, double tau_pt = kDefaultTauPoint);

/// Squared mean distance of the two predicted endpoints to the detected
/// infinite line (px^2). nullopt for a degenerate or behind-camera prediction.
std::optional<double> line_dynamic_error(const LineMatch& match, const Landmark3D& prev_camera_line,
                                         const MotionModel& model, const StereoCamera& cam);

struct DynamicLineInput {
  LineMatch match;
  Landmark3D prev_camera_line;
};

enum class LlgAggregation { mean, sum };

struct DynamicLLGSet {
  std::vector<std::size_t> flagged_groups;       // indices into llgs_curr
  std::vector<std::optional<double>> group_error; // per LLG, px^2
  std::unordered_set<FeatureId> dynamic_lines;    // all members of flagged groups
};

/// Flags a current-frame LLG when the aggregated squared dynamic distance of
/// its matched members exceeds rho.
DynamicLLGSet detect_dynamic_llgs(std::span<const DynamicLineInput> lines,
                                  std::span<const LocalLineGroup> llgs_curr, const MotionModel& model,
                                  const StereoCamera& cam, double rho = kDefaultRhoLine,
                                  LlgAggregation aggregation = LlgAggregation::mean);

/// Per-frame diagnostic rows: frame,kind,index,error,flagged.
void write_dynamics_csv_header(std::ostream& out);
void write_dynamics_csv(std::ostream& out, std::size_t frame, const DynamicGridMap& grids,
                        const DynamicLLGSet& llgs);

}  // namespace dynpl
