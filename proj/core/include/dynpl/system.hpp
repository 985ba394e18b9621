#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "dynpl/config.hpp"
#include "dynpl/loop_closure.hpp"
#include "dynpl/map.hpp"
#include "dynpl/sequence.hpp"
#include "dynpl/synthetic.hpp"
#include "dynpl/trajectory.hpp"

namespace dynpl {

struct FrameInput {
  StereoFrame features;
  std::optional<GrayImage> left_image;
};

/// Frames in strictly increasing index order with a fixed calibration.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t size() const = 0;
  virtual const StereoCamera& camera() const = 0;
  virtual FrameInput frame(std::size_t i) const = 0;
};

class SequenceSource : public FrameSource {
 public:
  explicit SequenceSource(Sequence sequence) : sequence_(std::move(sequence)) {}

  std::size_t size() const override { return sequence_.size(); }
  const StereoCamera& camera() const override { return sequence_.camera(); }
  FrameInput frame(std::size_t i) const override;
  const Sequence& sequence() const { return sequence_; }

 private:
  Sequence sequence_;
};

/// In-memory synthetic scene; images are ray-cast on access when enabled.
class SceneSource : public FrameSource {
 public:
  SceneSource(const SyntheticScene& scene, bool images) : scene_(scene), images_(images) {}

  std::size_t size() const override { return scene_.frames.size(); }
  const StereoCamera& camera() const override { return scene_.cam; }
  FrameInput frame(std::size_t i) const override;

 private:
  const SyntheticScene& scene_;
  bool images_;
};

/// Pre-built frames held in memory.
class MemorySource : public FrameSource {
 public:
  MemorySource(const StereoCamera& cam, std::vector<FrameInput> frames) : cam_(cam), frames_(std::move(frames)) {}

  std::size_t size() const override { return frames_.size(); }
  const StereoCamera& camera() const override { return cam_; }
  FrameInput frame(std::size_t i) const override { return frames_.at(i); }

 private:
  StereoCamera cam_;
  std::vector<FrameInput> frames_;
};

struct FrameRecord {
  std::size_t index = 0;
  double timestamp = 0.0;
  bool keyframe = false;
  EstimationStatus status = EstimationStatus::converged;
  std::size_t point_outliers = 0;
  std::size_t line_outliers = 0;
  bool dynamics_ran = false;
  std::unordered_set<FeatureId> dynamic_points;  // flagged by the dynamics module this frame
  std::unordered_set<FeatureId> dynamic_lines;
  std::optional<double> ggs_scalar;
};

struct TimingSample {
  std::string stage;
  std::size_t frame = 0;
  double millis = 0.0;
};

struct RunResult {
  Trajectory trajectory;
  std::vector<FrameRecord> frames;
  std::vector<LoopCandidate> loop_candidates;
  std::size_t loops_closed = 0;
  std::vector<TimingSample> timings;
  std::string dynamics_csv;
  std::unique_ptr<LocalMap> map;
  std::vector<BAReport> local_ba;
  std::optional<BAReport> global_ba;
  double seconds = 0.0;

  std::size_t tracking_lost() const;
};

LoopOptions loop_options(const RunConfig& config);
EstimationOptions estimation_options(const RunConfig& config);
MapOptions map_options(const RunConfig& config);

/// Frame-by-frame tracking, keyframe selection, local mapping and loop
/// closing; `finish` runs the final global BA and assembles the trajectory.
class Tracker {
 public:
  Tracker(const StereoCamera& cam, RunConfig config);
  ~Tracker();
  Tracker(const Tracker&) = delete;
  Tracker& operator=(const Tracker&) = delete;

  void process(const FrameInput& input);
  RunResult finish();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

RunResult run_pipeline(const FrameSource& source, const RunConfig& config);

/// trajectory.txt, keyframes.txt, loops.csv, dynamics.csv, timing.csv,
/// map.txt and config.txt.
void write_run_outputs(const std::filesystem::path& dir, const RunResult& result, const RunConfig& config);

}  // namespace dynpl
