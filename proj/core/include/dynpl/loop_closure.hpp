#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dynpl/association.hpp"
#include "dynpl/map.hpp"
#include "dynpl/pose_estimation.hpp"
#include "dynpl/pose_graph.hpp"

namespace dynpl {

struct LoopOptions {
  double lc_alpha = 0.001;
  double inlier_min = 0.5;
  double lc_rat_min = 0.2;  // literal gate, strict mode only
  std::size_t exclusion_window = 30;
  double neighbor_factor = 1.5;
  double sim_factor = 2.0;
  double max_drift_fraction = 0.1;
  double loop_inlier_px = 3.0;
  double pgo_covisibility_ratio = 0.2;
  bool strict_paper = false;
  std::size_t max_candidates = 3;
  std::size_t min_matches = 12;
  EstimationOptions estimation;
  PointFilterOptions point_filter;
};

struct LoopCandidate {
  KeyFrameId current = 0;
  KeyFrameId looped = 0;
  double sim_v = 0.0;
  PoseSE3 relative;           // T_i * T_j^-1 from the map (camera_from_world convention)
  PoseSE3 measured;           // current_from_looped estimated from matched features
  double ratio_inl = 0.0;
  double lc_rat = 0.0;
  bool accepted = false;
  std::string reason;
};

struct RankedKeyFrame {
  KeyFrameId id = 0;
  double sim_v = 0.0;
};

/// Keyframes older than the exclusion window (history[j] for
/// j + exclusion_window < history.size()) whose sim_v to `current` is below
/// `sim_threshold`, sorted ascending (ties by id). Null entries are skipped.
std::vector<RankedKeyFrame> find_loop_candidates(const GGSDescriptor& current,
                                                 const std::vector<const GGSDescriptor*>& history,
                                                 double sim_threshold, std::size_t exclusion_window);

/// Two-stage check of `looped` against the already inserted `current`
/// keyframe: geometric (pose from id-matched, filtered points; inlier ratio
/// and drift bound or the literal lc_rat gate in strict mode) then
/// similarity consistency with the looped keyframe's temporal neighbours.
LoopCandidate verify_candidate(const LocalMap& map, KeyFrameId current, KeyFrameId looped, double sim_v,
                               double sim_threshold, const LoopOptions& options = {});

/// Pose graph over all keyframes (oldest fixed): sequential odometry edges,
/// covisibility edges sharing at least `pgo_covisibility_ratio` of the
/// smaller observation set, and the loop edge.
PoseGraph build_loop_pose_graph(const LocalMap& map, const LoopCandidate& loop, const LoopOptions& options = {});

struct LoopCorrection {
  bool applied = false;
  PGOReport report;
  std::string diagnostic;
};

LoopCorrection correct_loop(LocalMap& map, const LoopCandidate& loop, const LoopOptions& options = {});

/// Tracks the consecutive-keyframe similarity statistics that set the
/// adaptive candidate threshold.
class LoopDetector {
 public:
  explicit LoopDetector(LoopOptions options = {}) : options_(options) {}

  void record_consecutive(double sim_v) { consecutive_.push_back(sim_v); }
  /// sim_factor * median of the consecutive sims; infinity before any.
  double sim_threshold() const;

  /// Candidate search and verification for the newest keyframe; returns
  /// every evaluated candidate (at most max_candidates), the first accepted
  /// one last.
  std::vector<LoopCandidate> detect(const LocalMap& map, KeyFrameId current) const;

  const LoopOptions& options() const { return options_; }

 private:
  LoopOptions options_;
  std::vector<double> consecutive_;
};

void write_loop_csv_header(std::ostream& out);
void write_loop_csv(std::ostream& out, const LoopCandidate& c);

}  // namespace dynpl
