#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "dynpl/synthetic.hpp"
#include "dynpl/system.hpp"

namespace dynpl::fixtures {

inline constexpr std::uint64_t kDynamicSeed = 1;

/// 200 frames, two moving boxes, 0.5 px noise.
inline SceneSpec dynamic_spec() {
  SceneSpec s;
  s.frames = 200;
  s.dynamic_bodies = 2;
  s.noise_sigma = 0.5;
  return s;
}

inline SceneSpec static_spec(int frames, double sigma) {
  SceneSpec s;
  s.frames = frames;
  s.noise_sigma = sigma;
  return s;
}

/// Keyframe views around the ring: `per_lap` evenly spaced stations per lap,
/// each lap shifted outward by lap_offset.
inline SceneSpec loop_spec() {
  SceneSpec s;
  s.ring_radius = 60.0;
  s.lap_offset = 0.3;
  return s;
}

inline std::vector<PoseSE3> loop_keyframe_poses(const SceneSpec& spec, int per_lap, int laps) {
  const double lap = 2.0 * 3.14159265358979323846 * spec.ring_radius;
  std::vector<PoseSE3> poses;
  for (int k = 0; k < per_lap * laps; ++k) poses.push_back(ring_camera_pose(spec, lap * k / per_lap));
  return poses;
}

/// Frames with their images rendered up front so that pipeline timing
/// excludes ray casting.
inline std::vector<FrameInput> prerender(const SyntheticScene& scene, bool images) {
  std::vector<FrameInput> out;
  out.reserve(scene.frames.size());
  for (std::size_t k = 0; k < scene.frames.size(); ++k) {
    FrameInput in;
    in.features = scene.frames[k];
    if (images) in.left_image = render_frame(scene, k);
    out.push_back(std::move(in));
  }
  return out;
}

inline std::string tum_text(const Trajectory& t) {
  std::ostringstream ss;
  write_tum(ss, t);
  return ss.str();
}

inline std::string serialized_features(const SyntheticScene& scene) {
  std::ostringstream ss;
  for (const auto& f : scene.frames) write_features(ss, f);
  write_tum(ss, scene.ground_truth());
  return ss.str();
}

}  // namespace dynpl::fixtures
