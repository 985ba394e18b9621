#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <unordered_set>
#include <vector>

#include "dynpl/bundle_adjustment.hpp"
#include "dynpl/frame.hpp"
#include "dynpl/ggs.hpp"

namespace dynpl {

using KeyFrameId = std::size_t;

inline constexpr int kDefaultCovisibilityMin = 20;

struct KeyFrame {
  KeyFrameId id = 0;
  std::size_t frame_index = 0;
  double timestamp = 0.0;
  PoseSE3 camera_from_world;
  StereoFrame features;
  std::optional<GGSDescriptor> ggs;
  std::set<FeatureId> point_ids;  // landmarks this keyframe observes
  std::set<FeatureId> line_ids;

  PoseSE3 world_from_camera() const { return camera_from_world.inverse(); }
  const PointFeature2D* point_feature(FeatureId id) const;
  const StereoLineFeature* line_feature(FeatureId id) const;
};

struct MapPoint {
  Vec3 position = Vec3::Zero();
  KeyFrameId anchor = 0;  // keyframe that created it
  std::set<KeyFrameId> observers;
};

struct MapLine {
  Landmark3D line;
  KeyFrameId anchor = 0;
  std::set<KeyFrameId> observers;
};

/// Shared-landmark counts between keyframes. Counts are kept for every
/// pair; an edge exists when the count reaches `min_shared`.
class CovisibilityGraph {
 public:
  explicit CovisibilityGraph(int min_shared = kDefaultCovisibilityMin) : min_shared_(min_shared) {}

  void add_node(KeyFrameId id);
  void increment(KeyFrameId a, KeyFrameId b);
  void decrement(KeyFrameId a, KeyFrameId b);

  int shared(KeyFrameId a, KeyFrameId b) const;
  /// Edge weight, 0 when below the threshold.
  int weight(KeyFrameId a, KeyFrameId b) const;
  bool has_edge(KeyFrameId a, KeyFrameId b) const { return weight(a, b) > 0; }
  std::vector<KeyFrameId> neighbors(KeyFrameId id) const;
  std::vector<std::pair<KeyFrameId, KeyFrameId>> edges() const;
  const std::set<KeyFrameId>& nodes() const { return nodes_; }
  int min_shared() const { return min_shared_; }

 private:
  int min_shared_;
  std::set<KeyFrameId> nodes_;
  std::map<KeyFrameId, std::map<KeyFrameId, int>> counts_;
};

struct MapOptions {
  int covisibility_min = kDefaultCovisibilityMin;
  double association_gate_px = 8.0;
  double min_disparity = kDefaultMinDisparity;
  bool use_lines = true;
  BAOptions ba;
  int local_ba_iterations = 10;
  int global_ba_iterations = 20;
};

struct KeyFrameInsertion {
  KeyFrameId id = 0;
  std::size_t associated_points = 0;
  std::size_t associated_lines = 0;
  std::size_t new_points = 0;
  std::size_t new_lines = 0;
};

/// Keyframes, point and line landmarks and the covisibility graph.
/// Landmarks are keyed by feature id; points and lines have separate id
/// spaces.
class LocalMap {
 public:
  LocalMap(const StereoCamera& cam, MapOptions options = {});

  /// Associates the frame's features to existing landmarks whose reprojection
  /// through `camera_from_world` falls within the association gate, and
  /// triangulates landmarks for ids not yet in the map. Ids in `excluded_*`
  /// are neither associated nor created.
  KeyFrameInsertion insert_keyframe(const StereoFrame& frame, const PoseSE3& camera_from_world,
                                    std::optional<GGSDescriptor> ggs = std::nullopt,
                                    const std::unordered_set<FeatureId>& excluded_points = {},
                                    const std::unordered_set<FeatureId>& excluded_lines = {});

  /// Joint optimization over the anchor and its direct covisibility
  /// neighbours; other observers of the involved landmarks enter as fixed
  /// poses and the oldest neighbourhood keyframe is held fixed.
  BAReport local_bundle_adjust(KeyFrameId anchor);
  /// All keyframes, the first one fixed.
  BAReport global_bundle_adjust();

  /// Replaces keyframe poses and moves every landmark rigidly with its
  /// anchor keyframe's correction.
  void apply_pose_corrections(const std::vector<PoseSE3>& camera_from_world);

  /// Drops observations whose reprojection error exceeds the association
  /// gate, then landmarks left without observers. Returns removed landmarks.
  std::size_t cull();

  const std::vector<KeyFrame>& keyframes() const { return keyframes_; }
  const KeyFrame& keyframe(KeyFrameId id) const { return keyframes_.at(id); }
  const std::map<FeatureId, MapPoint>& points() const { return points_; }
  const std::map<FeatureId, MapLine>& lines() const { return lines_; }
  const CovisibilityGraph& covisibility() const { return covis_; }
  const StereoCamera& camera() const { return cam_; }
  const MapOptions& options() const { return options_; }

  /// Shared landmark count recomputed from the observation lists.
  int count_shared(KeyFrameId a, KeyFrameId b) const;

  /// KF lines `KF id r00 r01 r02 t0 ... r22 t2` (world_from_camera, row
  /// major) then `LM id point x y z` and `LM id line x1 y1 z1 x2 y2 z2`.
  void write_dump(std::ostream& out) const;

 private:
  BAReport run_ba(const std::vector<KeyFrameId>& free, const std::set<KeyFrameId>& fixed,
                  const std::vector<KeyFrameId>& landmark_sources, int iterations);
  void add_point_observation(KeyFrameId kf, FeatureId id);
  void add_line_observation(KeyFrameId kf, FeatureId id);
  void remove_point_observation(KeyFrameId kf, FeatureId id);
  void remove_line_observation(KeyFrameId kf, FeatureId id);

  StereoCamera cam_;
  MapOptions options_;
  std::vector<KeyFrame> keyframes_;
  std::map<FeatureId, MapPoint> points_;
  std::map<FeatureId, MapLine> lines_;
  CovisibilityGraph covis_;
};

}  // namespace dynpl
