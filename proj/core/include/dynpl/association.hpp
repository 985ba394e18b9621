#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dynpl/camera.hpp"

namespace dynpl {

inline constexpr int kPointGridCols = 64;
inline constexpr int kPointGridRows = 48;
inline constexpr double kDefaultPointAlpha = 1.5;
inline constexpr double kDefaultPointEpsilon = 1.0;  // px^2
inline constexpr double kDefaultLineMeanFactor = 2.0;

struct GridIndex {
  int col = 0;
  int row = 0;

  int linear() const { return row * kPointGridCols + col; }
  friend bool operator==(const GridIndex&, const GridIndex&) = default;
};

/// Cell of the 64x48 image partition holding a pixel.
GridIndex point_grid_cell(const Vec2& px, int width, int height);

// ---------------------------------------------------------------------------
// Stereo matching

using BinaryDescriptor = std::array<std::uint8_t, 32>;

struct KeypointObservation {
  FeatureId id = 0;
  double u = 0.0;
  double v = 0.0;
  std::optional<BinaryDescriptor> descriptor;
};

struct StereoMatchOptions {
  double row_tolerance = 1.0;
  double max_disparity = 96.0;
  int max_hamming = 256;
  bool match_by_id = false;
};

int hamming_distance(const BinaryDescriptor& a, const BinaryDescriptor& b);

/// Assigns a disparity to every left keypoint that has a right partner.
/// With `match_by_id` partners share the id; otherwise a row-constrained
/// search picks the lowest Hamming distance (or, without descriptors, the
/// closest row then smallest disparity). Right keypoints are used once.
std::vector<PointFeature2D> match_stereo(std::span<const KeypointObservation> left,
                                         std::span<const KeypointObservation> right,
                                         const StereoMatchOptions& options = {});

// ---------------------------------------------------------------------------
// Point mismatch filter

struct PointMatch {
  PointFeature2D prev;
  PointFeature2D curr;
  GridIndex grid_prev;
  GridIndex grid_curr;
  double g_prev = 0.0;  // grid cross values, px^2
  double g_curr = 0.0;
};

/// Builds temporal matches by feature id, in `curr` order.
std::vector<PointMatch> match_points_by_id(std::span<const PointFeature2D> prev,
                                           std::span<const PointFeature2D> curr, int width,
                                           int height);

/// Mean scalar 2-D cross product of `target` with each peer:
/// (1/n) * sum(target.x * peer.y - target.y * peer.x). Empty peers -> nullopt.
std::optional<double> grid_cross_value(const Vec2& target, std::span<const Vec2> peers);

struct PointFilterOptions {
  double alpha = kDefaultPointAlpha;
  double epsilon = kDefaultPointEpsilon;
};

template <typename Match>
struct FilterResult {
  std::vector<Match> inliers;
  std::vector<Match> outliers;
};

/// Grid cross-value consistency test between the previous and current
/// positions of matched points.
///
/// Coordinates are taken relative to the centroid of all matched points in
/// their own frame, so any global 2-D rigid motion leaves every cross value
/// unchanged. Matches are bucketed by their previous-frame cell; within a
/// bucket of size >= 2 the peers of a match are its bucket mates, and a
/// match is an outlier when |g_prev - g_curr| > alpha * mean(|g_prev - g_curr|)
/// + epsilon over the bucket. A match alone in its cell takes its peers from
/// the 8 neighbouring cells and is judged against the image-wide mean; with
/// no neighbours at all it is kept.
FilterResult<PointMatch> filter_point_matches(std::span<const PointMatch> matches,
                                              const PointFilterOptions& options = {});

// ---------------------------------------------------------------------------
// Lines

struct LineMatch {
  LineFeature2D prev;
  LineFeature2D curr;
  double angle_diff = 0.0;     // radians in [0, pi/2], direction-sign agnostic
  double midpoint_dist = 0.0;  // pixels

  static LineMatch make(const LineFeature2D& prev, const LineFeature2D& curr);
};

/// Angle between two segments ignoring endpoint order, in [0, pi/2].
double line_angle_difference(const LineFeature2D& a, const LineFeature2D& b);

std::vector<LineMatch> match_lines_by_id(std::span<const LineFeature2D> prev,
                                         std::span<const LineFeature2D> curr);

/// Connected set of lines whose circular domains (center = midpoint,
/// diameter = length) overlap. Members are sorted by id.
struct LocalLineGroup {
  std::vector<FeatureId> members;
};

bool circular_domains_overlap(const LineFeature2D& a, const LineFeature2D& b);

/// Connected components of the overlap relation, ordered by smallest member id.
std::vector<LocalLineGroup> build_llgs(std::span<const LineFeature2D> lines);

struct LineFilterOptions {
  double mean_factor = kDefaultLineMeanFactor;
};

/// Rejects a match whose angle difference or midpoint distance exceeds
/// mean_factor times the mean over the matched members of its LLG
/// (previous frame). Groups with a single matched member use the image-wide
/// means. Both tests must pass for a match to stay an inlier.
FilterResult<LineMatch> filter_line_matches(std::span<const LineMatch> matches,
                                            std::span<const LocalLineGroup> llgs_prev,
                                            const LineFilterOptions& options = {});

}  // namespace dynpl
