#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string_view>
#include <vector>

#include "dynpl/frame.hpp"
#include "dynpl/image.hpp"
#include "dynpl/sequence.hpp"
#include "dynpl/trajectory.hpp"

namespace dynpl {

/// Ring-shaped corridor: the camera drives around a circle between an inner
/// and an outer textured wall over a textured ground plane. The world frame
/// is the first camera frame (x right, y down, z forward); the ring center
/// lies at (-ring_radius, 0, 0).
struct SceneSpec {
  int frames = 200;
  int width = 1242;
  int height = 376;
  double fx = 718.856;
  double fy = 718.856;
  double cx = 607.1928;
  double cy = 185.2157;
  double baseline = 0.537;
  double frame_interval = 0.1;  // seconds

  double ring_radius = 60.0;
  double lane_half_width = 8.0;  // walls at ring_radius -/+ this
  double wall_height = 6.0;
  double camera_height = 1.6;   // ground plane at y = camera_height
  double speed = 0.5;           // meters per frame along the ring
  double lap_offset = 0.0;      // radial shift accumulated per lap

  int points_per_frame = 300;
  int lines_per_frame = 80;
  double max_range = 40.0;

  int dynamic_bodies = 0;
  int body_points = 60;
  double body_lateral_amplitude = 1.5;
  int body_lateral_period = 72;       // frames
  double body_longitudinal_amplitude = 3.0;
  int body_longitudinal_period = 96;  // frames

  double noise_sigma = 0.0;  // px, every coordinate
  double outlier_rate = 0.0;
  std::uint64_t texture_seed = 7;

  /// Throws std::invalid_argument naming the offending key.
  void set(std::string_view key, std::string_view value);
  void validate() const;
  StereoCamera camera() const;
};

/// `key=value` lines with `#` comments.
SceneSpec parse_scene_spec(std::istream& in, const std::string& source = "scene");
SceneSpec read_scene_spec(const std::filesystem::path& path);

struct BoxBody {
  Vec3 half_extent = Vec3(1.0, 0.8, 2.0);  // body axes: x lateral, y down, z along the ring
  std::vector<std::pair<FeatureId, Vec3>> points;         // body frame
  std::vector<std::pair<FeatureId, Landmark3D>> lines;    // body frame
  std::vector<PoseSE3> world_from_body;                   // per frame
  std::uint8_t shade = 80;
};

struct SyntheticScene {
  SceneSpec spec;
  StereoCamera cam;
  std::uint64_t seed = 0;
  std::vector<double> timestamps;
  std::vector<PoseSE3> world_from_camera;  // ground truth per frame
  std::map<FeatureId, Vec3> static_points;
  std::map<FeatureId, Landmark3D> static_lines;
  std::vector<BoxBody> bodies;
  std::vector<StereoFrame> frames;
  std::vector<FrameLabels> labels;

  Trajectory ground_truth() const;
};

/// Ground-truth camera pose after travelling `arc_length` meters.
PoseSE3 ring_camera_pose(const SceneSpec& spec, double arc_length);

/// Deterministic for a fixed (spec, seed). Noise and outliers are applied
/// after projection. Throws std::runtime_error when a frame sees no static
/// landmark.
SyntheticScene generate_scene(const SceneSpec& spec, std::uint64_t seed);

/// Ray-cast left image of the static corridor plus the bodies at `frame`.
GrayImage render_frame(const SyntheticScene& scene, std::size_t frame);
/// Static corridor only, from an arbitrary pose.
GrayImage render_view(const SceneSpec& spec, const PoseSE3& world_from_camera);

/// Writes calib.txt, features/, labels/, groundtruth.txt and, when
/// `images` is set, image_0/*.pgm.
void write_sequence(const SyntheticScene& scene, const std::filesystem::path& dir, bool images = true);

}  // namespace dynpl
