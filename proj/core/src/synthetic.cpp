#include "dynpl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <istream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dynpl/text.hpp"

namespace dynpl {
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = 1e-9;
constexpr double kVisibilityTolerance = 0.05;  // meters
constexpr double kMinRange = 1.0;
constexpr double kMinLinePixels = 15.0;
constexpr double kMaxLinePixels = 120.0;  // detectors split longer segments
constexpr FeatureId kBodyIdStride = 1'000'000;

enum class Surface { none, inner_wall, outer_wall, ground, body };

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Surface surface = Surface::none;
  int body = -1;
};

struct BodyState {
  PoseSE3 world_from_body;
  PoseSE3 body_from_world;
  Vec3 half_extent;
  std::uint8_t shade = 80;
};

struct Ring {
  double cx = 0.0;
  double cz = 0.0;
  double inner = 0.0;
  double outer = 0.0;
  double ground_y = 0.0;
  double top_y = 0.0;

  explicit Ring(const SceneSpec& s)
      : cx(-s.ring_radius),
        inner(s.ring_radius - s.lane_half_width),
        outer(s.ring_radius + s.lane_half_width),
        ground_y(s.camera_height),
        top_y(s.camera_height - s.wall_height) {}

  double radius_of(const Vec3& p) const { return std::hypot(p.x() - cx, p.z() - cz); }
  double angle_of(const Vec3& p) const { return std::atan2(p.z() - cz, p.x() - cx); }
};

void cylinder_hit(const Ring& ring, double radius, Surface surface, const Vec3& o, const Vec3& d, Hit& best) {
  const double ox = o.x() - ring.cx;
  const double oz = o.z() - ring.cz;
  const double a = d.x() * d.x() + d.z() * d.z();
  if (a < kEps) return;
  const double b = 2.0 * (ox * d.x() + oz * d.z());
  const double c = ox * ox + oz * oz - radius * radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return;
  const double sq = std::sqrt(disc);
  for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
    if (t <= kEps || t >= best.t) continue;
    const double y = o.y() + t * d.y();
    if (y < ring.top_y || y > ring.ground_y) continue;
    best = {t, surface, -1};
    return;
  }
}

void box_hit(const BodyState& body, int index, const Vec3& o, const Vec3& d, Hit& best) {
  const Vec3 ob = body.body_from_world * o;
  const Vec3 db = body.body_from_world.rotation() * d;
  double t0 = kEps;
  double t1 = best.t;
  for (int i = 0; i < 3; ++i) {
    const double h = body.half_extent[i];
    if (std::abs(db[i]) < 1e-15) {
      if (ob[i] < -h || ob[i] > h) return;
      continue;
    }
    double a = (-h - ob[i]) / db[i];
    double b = (h - ob[i]) / db[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return;
  }
  if (t0 < best.t) best = {t0, Surface::body, index};
}

Hit cast(const Ring& ring, const std::vector<BodyState>& bodies, const Vec3& o, const Vec3& d) {
  Hit best;
  cylinder_hit(ring, ring.inner, Surface::inner_wall, o, d, best);
  cylinder_hit(ring, ring.outer, Surface::outer_wall, o, d, best);
  if (d.y() > kEps) {
    const double t = (ring.ground_y - o.y()) / d.y();
    if (t > kEps && t < best.t) {
      const double r = ring.radius_of(o + t * d);
      if (r >= ring.inner && r <= ring.outer) best = {t, Surface::ground, -1};
    }
  }
  for (std::size_t i = 0; i < bodies.size(); ++i) box_hit(bodies[i], static_cast<int>(i), o, d, best);
  return best;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  const std::uint64_t h = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(ix) * 0x632be59bd9b4e019ULL ^
                                                   static_cast<std::uint64_t>(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double value_noise(double x, double y, std::uint64_t seed) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  double tx = x - fx;
  double ty = y - fy;
  tx = tx * tx * (3.0 - 2.0 * tx);
  ty = ty * ty * (3.0 - 2.0 * ty);
  const double a = lattice(ix, iy, seed);
  const double b = lattice(ix + 1, iy, seed);
  const double c = lattice(ix, iy + 1, seed);
  const double e = lattice(ix + 1, iy + 1, seed);
  return (a + (b - a) * tx) + ((c + (e - c) * tx) - (a + (b - a) * tx)) * ty;
}

std::uint8_t to_gray(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

std::uint8_t shade(const Ring& ring, const std::vector<BodyState>& bodies, const Hit& hit, const Vec3& p,
                   std::uint64_t seed) {
  switch (hit.surface) {
    case Surface::none:
      return 225;
    case Surface::ground: {
      const double v = 0.5 * value_noise(p.x() / 6.0, p.z() / 6.0, seed + 11) +
                       0.5 * value_noise(p.x() / 1.1, p.z() / 1.1, seed + 12);
      return to_gray(20.0 + 120.0 * v);
    }
    case Surface::inner_wall:
    case Surface::outer_wall: {
      const bool inner = hit.surface == Surface::inner_wall;
      const double radius = inner ? ring.inner : ring.outer;
      double angle = ring.angle_of(p);
      if (angle < 0.0) angle += 2.0 * kPi;
      const double s = angle * radius;
      const double y = p.y();
      const std::uint64_t k = seed + (inner ? 100 : 200);
      const double v = 0.45 * value_noise(s / 9.0, y / 9.0, k) + 0.35 * value_noise(s / 2.2, y / 2.2, k + 1) +
                       0.2 * value_noise(s / 0.6, y / 0.6, k + 2);
      return to_gray(30.0 + 200.0 * v);
    }
    case Surface::body: {
      const BodyState& b = bodies[static_cast<std::size_t>(hit.body)];
      const Vec3 q = b.body_from_world * p;
      int face = 0;
      double best = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double r = std::abs(q[i]) / b.half_extent[i];
        if (r > best) {
          best = r;
          face = i;
        }
      }
      return to_gray(b.shade + 25.0 * face);
    }
  }
  return 0;
}

GrayImage render(const SceneSpec& spec, const PoseSE3& world_from_camera, const std::vector<BodyState>& bodies) {
  const Ring ring(spec);
  GrayImage img(spec.width, spec.height);
  const Vec3 o = world_from_camera.translation();
  const Mat3& r = world_from_camera.rotation();
  for (int v = 0; v < spec.height; ++v) {
    const double yn = (v - spec.cy) / spec.fy;
    for (int u = 0; u < spec.width; ++u) {
      const Vec3 d = r * Vec3((u - spec.cx) / spec.fx, yn, 1.0);
      const Hit hit = cast(ring, bodies, o, d);
      img.at(u, v) = shade(ring, bodies, hit, o + (std::isfinite(hit.t) ? hit.t : 0.0) * d, spec.texture_seed);
    }
  }
  return img;
}

// Rotation whose columns are the camera axes at ring angle phi: x outward,
// y down, z along the direction of travel.
Mat3 ring_rotation(double phi) {
  Mat3 r;
  r.col(0) = Vec3(std::cos(phi), 0.0, std::sin(phi));
  r.col(1) = Vec3(0.0, 1.0, 0.0);
  r.col(2) = Vec3(-std::sin(phi), 0.0, std::cos(phi));
  return r;
}

double triangle_wave(double x) {
  const double f = x - std::floor(x);
  return f < 0.5 ? 4.0 * f - 1.0 : 3.0 - 4.0 * f;
}

std::vector<BodyState> body_states(const SyntheticScene& scene, std::size_t frame) {
  std::vector<BodyState> out;
  for (const auto& b : scene.bodies) {
    const PoseSE3& t = b.world_from_body.at(frame);
    out.push_back({t, t.inverse(), b.half_extent, b.shade});
  }
  return out;
}

class Visibility {
 public:
  Visibility(const SceneSpec& spec, const StereoCamera& cam, const PoseSE3& world_from_camera,
             const std::vector<BodyState>& bodies)
      : spec_(spec),
        ring_(spec),
        cam_(cam),
        camera_from_world_(world_from_camera.inverse()),
        origin_(world_from_camera.translation()),
        bodies_(bodies) {}

  bool point(const Vec3& p) const {
    const Vec3 pc = camera_from_world_ * p;
    if (pc.z() < 0.5) return false;
    if (!cam_.in_image(cam_.project(pc), 1.0)) return false;
    const Vec3 d = p - origin_;
    const double dist = d.norm();
    if (dist > spec_.max_range || dist < kMinRange) return false;
    const Hit hit = cast(ring_, bodies_, origin_, d);
    return hit.t >= 1.0 - kVisibilityTolerance / dist;
  }

  bool line(const Landmark3D& l) const {
    if (!point(l.start) || !point(l.end) || !point(0.5 * (l.start + l.end))) return false;
    const Vec2 a = cam_.project(camera_from_world_ * l.start);
    const Vec2 b = cam_.project(camera_from_world_ * l.end);
    const double len = (a - b).norm();
    return len >= kMinLinePixels && len <= kMaxLinePixels;
  }

  const Ring& ring() const { return ring_; }
  const PoseSE3& camera_from_world() const { return camera_from_world_; }
  const Vec3& origin() const { return origin_; }
  const std::vector<BodyState>& bodies() const { return bodies_; }

 private:
  const SceneSpec& spec_;
  Ring ring_;
  const StereoCamera& cam_;
  PoseSE3 camera_from_world_;
  Vec3 origin_;
  const std::vector<BodyState>& bodies_;
};

BoxBody make_body(const SceneSpec& spec, int index, std::mt19937_64& rng) {
  BoxBody body;
  body.shade = static_cast<std::uint8_t>(60 + 50 * (index % 3));
  const Vec3 h = body.half_extent;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  // Faces: +-x sides, -y top, +-z ends (the +y bottom rests on the ground).
  const double areas[5] = {h.y() * h.z(), h.y() * h.z(), h.x() * h.z(), h.x() * h.y(), h.x() * h.y()};
  std::discrete_distribution<int> face(std::begin(areas), std::end(areas));
  const FeatureId base = kBodyIdStride * (index + 1);
  for (int j = 0; j < spec.body_points; ++j) {
    Vec3 p(unit(rng) * h.x(), unit(rng) * h.y(), unit(rng) * h.z());
    switch (face(rng)) {
      case 0: p.x() = h.x(); break;
      case 1: p.x() = -h.x(); break;
      case 2: p.y() = -h.y(); break;
      case 3: p.z() = h.z(); break;
      default: p.z() = -h.z(); break;
    }
    body.points.emplace_back(base + j, p);
  }
  const double sx[4] = {-1, 1, 1, -1};
  const double sz[4] = {-1, -1, 1, 1};
  FeatureId id = base;
  for (int i = 0; i < 4; ++i) {
    const int n = (i + 1) % 4;
    const Vec3 a(sx[i] * h.x(), -h.y(), sz[i] * h.z());
    const Vec3 b(sx[n] * h.x(), -h.y(), sz[n] * h.z());
    body.lines.emplace_back(id++, Landmark3D::line(a, b));
    body.lines.emplace_back(id++, Landmark3D::line(a, Vec3(a.x(), h.y(), a.z())));
  }
  return body;
}

void fill_body_track(const SceneSpec& spec, int index, BoxBody& body, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> phase(0.0, 1.0);
  const double lat_phase = phase(rng);
  const double lon_phase = phase(rng);
  const double lead0 = 12.0 + 4.0 * index;
  const double lat0 = (index % 2 == 0 ? -2.5 : 2.5);
  const double ground = spec.camera_height - body.half_extent.y();
  for (int k = 0; k < spec.frames; ++k) {
    const double lat =
        lat0 + spec.body_lateral_amplitude * triangle_wave(k / static_cast<double>(spec.body_lateral_period) + lat_phase);
    const double lead = lead0 + spec.body_longitudinal_amplitude *
                                    triangle_wave(k / static_cast<double>(spec.body_longitudinal_period) + lon_phase);
    const double phi = (spec.speed * k + lead) / spec.ring_radius;
    const double r = spec.ring_radius + lat;
    const Vec3 t(-spec.ring_radius + r * std::cos(phi), ground, r * std::sin(phi));
    body.world_from_body.emplace_back(ring_rotation(phi), t);
  }
}

std::optional<Landmark3D> wall_line(const Ring& ring, Surface surface, const Vec3& hit, bool vertical,
                                    double length) {
  if (vertical) {
    const double y0 = std::clamp(hit.y(), ring.top_y + 0.5 * length + 0.05, ring.ground_y - 0.5 * length - 0.05);
    if (ring.ground_y - ring.top_y < length + 0.1) return std::nullopt;
    return Landmark3D::line(Vec3(hit.x(), y0 - 0.5 * length, hit.z()), Vec3(hit.x(), y0 + 0.5 * length, hit.z()));
  }
  // Chord of the wall circle centered on the hit, pushed out so that both
  // endpoints and the midpoint stay on the visible side of the wall.
  const double radius = surface == Surface::inner_wall ? ring.inner : ring.outer;
  const double angle = ring.angle_of(hit);
  const double half = 0.5 * length / radius;
  const double r = surface == Surface::inner_wall ? radius / std::cos(half) : radius;
  const auto at = [&](double a) { return Vec3(ring.cx + r * std::cos(a), hit.y(), ring.cz + r * std::sin(a)); };
  return Landmark3D::line(at(angle - half), at(angle + half));
}

void add_noise(double& x, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return;
  std::normal_distribution<double> n(0.0, sigma);
  x += n(rng);
}

}  // namespace

void SceneSpec::set(std::string_view key, std::string_view value) {
  const auto fail = [&] { throw std::invalid_argument("invalid value '" + std::string(value) + "' for '" + std::string(key) + "'"); };
  const auto as_double = [&](double& out) {
    if (!parse_double(value, out)) fail();
  };
  const auto as_int = [&](int& out) {
    if (!parse_int(value, out)) fail();
  };
  if (key == "frames") as_int(frames);
  else if (key == "width") as_int(width);
  else if (key == "height") as_int(height);
  else if (key == "fx") as_double(fx);
  else if (key == "fy") as_double(fy);
  else if (key == "cx") as_double(cx);
  else if (key == "cy") as_double(cy);
  else if (key == "baseline") as_double(baseline);
  else if (key == "frame_interval") as_double(frame_interval);
  else if (key == "ring_radius") as_double(ring_radius);
  else if (key == "lane_half_width") as_double(lane_half_width);
  else if (key == "wall_height") as_double(wall_height);
  else if (key == "camera_height") as_double(camera_height);
  else if (key == "speed") as_double(speed);
  else if (key == "lap_offset") as_double(lap_offset);
  else if (key == "points_per_frame") as_int(points_per_frame);
  else if (key == "lines_per_frame") as_int(lines_per_frame);
  else if (key == "max_range") as_double(max_range);
  else if (key == "dynamic_bodies") as_int(dynamic_bodies);
  else if (key == "body_points") as_int(body_points);
  else if (key == "body_lateral_amplitude") as_double(body_lateral_amplitude);
  else if (key == "body_lateral_period") as_int(body_lateral_period);
  else if (key == "body_longitudinal_amplitude") as_double(body_longitudinal_amplitude);
  else if (key == "body_longitudinal_period") as_int(body_longitudinal_period);
  else if (key == "noise_sigma") as_double(noise_sigma);
  else if (key == "outlier_rate") as_double(outlier_rate);
  else if (key == "texture_seed") {
    if (!parse_int(value, texture_seed)) fail();
  } else {
    throw std::invalid_argument("unknown scene key '" + std::string(key) + "'");
  }
}

void SceneSpec::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("scene: ") + what);
  };
  require(frames > 0, "frames must be positive");
  require(width > 0 && height > 0, "image size must be positive");
  require(fx > 0.0 && fy > 0.0 && baseline > 0.0, "camera intrinsics must be positive");
  require(frame_interval > 0.0, "frame_interval must be positive");
  require(ring_radius > lane_half_width && lane_half_width > 0.0, "need ring_radius > lane_half_width > 0");
  require(wall_height > camera_height && camera_height > 0.0, "need wall_height > camera_height > 0");
  require(speed >= 0.0, "speed must be non-negative");
  require(points_per_frame >= 0 && lines_per_frame >= 0, "feature targets must be non-negative");
  require(max_range > 0.0, "max_range must be positive");
  require(dynamic_bodies >= 0 && body_points >= 0, "body counts must be non-negative");
  require(body_lateral_period > 0 && body_longitudinal_period > 0, "body periods must be positive");
  require(noise_sigma >= 0.0, "noise_sigma must be non-negative");
  require(outlier_rate >= 0.0 && outlier_rate <= 1.0, "outlier_rate must be in [0, 1]");
}

StereoCamera SceneSpec::camera() const {
  StereoCamera cam{fx, fy, cx, cy, baseline, width, height};
  cam.validate();
  return cam;
}

SceneSpec parse_scene_spec(std::istream& in, const std::string& source) {
  SceneSpec spec;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(source + ":" + std::to_string(number) + ": expected key=value");
    }
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    try {
      spec.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(source + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  spec.validate();
  return spec;
}

SceneSpec read_scene_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scene spec " + path.string());
  return parse_scene_spec(in, path.string());
}

Trajectory SyntheticScene::ground_truth() const {
  Trajectory t;
  for (std::size_t k = 0; k < world_from_camera.size(); ++k) t.push_back({timestamps[k], world_from_camera[k]});
  return t;
}

PoseSE3 ring_camera_pose(const SceneSpec& spec, double arc_length) {
  const double phi = arc_length / spec.ring_radius;
  const double r = spec.ring_radius + spec.lap_offset * phi / (2.0 * kPi);
  const Vec3 c(-spec.ring_radius + r * std::cos(phi), 0.0, r * std::sin(phi));
  return {ring_rotation(phi), c};
}

SyntheticScene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticScene scene;
  scene.spec = spec;
  scene.cam = spec.camera();
  scene.seed = seed;
  std::mt19937_64 rng(seed);
  const StereoCamera& cam = scene.cam;
  const Ring ring(spec);

  for (int k = 0; k < spec.frames; ++k) {
    scene.timestamps.push_back(k * spec.frame_interval);
    scene.world_from_camera.push_back(ring_camera_pose(spec, spec.speed * k));
  }
  for (int b = 0; b < spec.dynamic_bodies; ++b) {
    BoxBody body = make_body(spec, b, rng);
    fill_body_track(spec, b, body, rng);
    scene.bodies.push_back(std::move(body));
  }

  std::vector<std::pair<FeatureId, Vec3>> point_pool;
  std::vector<std::pair<FeatureId, Landmark3D>> line_pool;
  FeatureId next_point = 1;
  FeatureId next_line = 1;
  std::uniform_real_distribution<double> pu(0.0, spec.width);
  std::uniform_real_distribution<double> pv(0.0, spec.height);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int k = 0; k < spec.frames; ++k) {
    const PoseSE3& twc = scene.world_from_camera[static_cast<std::size_t>(k)];
    const std::vector<BodyState> bodies = body_states(scene, static_cast<std::size_t>(k));
    const Visibility vis(spec, cam, twc, bodies);
    const PoseSE3& tcw = vis.camera_from_world();

    struct PointObs {
      FeatureId id;
      Vec3 world;
      FeatureLabel label;
    };
    struct LineObs {
      FeatureId id;
      Landmark3D world;
      FeatureLabel label;
    };
    std::vector<PointObs> points;
    std::vector<LineObs> lines;

    int dyn_points = 0;
    int dyn_lines = 0;
    for (std::size_t b = 0; b < scene.bodies.size(); ++b) {
      const PoseSE3& twb = bodies[b].world_from_body;
      for (const auto& [id, p] : scene.bodies[b].points) {
        const Vec3 w = twb * p;
        if (vis.point(w)) {
          points.push_back({id, w, FeatureLabel::dynamic_feature});
          ++dyn_points;
        }
      }
      for (const auto& [id, l] : scene.bodies[b].lines) {
        const Landmark3D w = l.transformed(twb);
        if (vis.line(w)) {
          lines.push_back({id, w, FeatureLabel::dynamic_feature});
          ++dyn_lines;
        }
      }
    }

    int static_points = 0;
    for (const auto& [id, p] : point_pool) {
      if (vis.point(p)) {
        points.push_back({id, p, FeatureLabel::static_feature});
        ++static_points;
      }
    }
    const int point_target = std::max(spec.points_per_frame - dyn_points, spec.points_per_frame / 2);
    for (int attempt = 0; static_points < point_target && attempt < 40 * point_target; ++attempt) {
      const Vec3 d = twc.rotation() * Vec3((pu(rng) - spec.cx) / spec.fx, (pv(rng) - spec.cy) / spec.fy, 1.0);
      const Hit hit = cast(ring, bodies, vis.origin(), d);
      if (hit.surface == Surface::none || hit.surface == Surface::body) continue;
      const Vec3 p = vis.origin() + hit.t * d;
      if (!vis.point(p)) continue;
      point_pool.emplace_back(next_point, p);
      points.push_back({next_point++, p, FeatureLabel::static_feature});
      ++static_points;
    }

    int static_lines = 0;
    for (const auto& [id, l] : line_pool) {
      if (vis.line(l)) {
        lines.push_back({id, l, FeatureLabel::static_feature});
        ++static_lines;
      }
    }
    const int line_target = std::max(spec.lines_per_frame - dyn_lines, spec.lines_per_frame / 2);
    for (int attempt = 0; static_lines < line_target && attempt < 40 * line_target; ++attempt) {
      const Vec3 d = twc.rotation() * Vec3((pu(rng) - spec.cx) / spec.fx, (pv(rng) - spec.cy) / spec.fy, 1.0);
      const Hit hit = cast(ring, bodies, vis.origin(), d);
      if (hit.surface != Surface::inner_wall && hit.surface != Surface::outer_wall) continue;
      const bool vertical = unit(rng) < 0.5;
      const double length = 0.3 + 0.9 * unit(rng);
      const auto l = wall_line(ring, hit.surface, vis.origin() + hit.t * d, vertical, length);
      if (!l || !vis.line(*l)) continue;
      line_pool.emplace_back(next_line, *l);
      lines.push_back({next_line++, *l, FeatureLabel::static_feature});
      ++static_lines;
    }

    if (static_points == 0 && static_lines == 0) {
      throw std::runtime_error("scene generation: frame " + std::to_string(k) + " sees no static landmark");
    }

    std::sort(points.begin(), points.end(), [](const PointObs& a, const PointObs& b) { return a.id < b.id; });
    std::sort(lines.begin(), lines.end(), [](const LineObs& a, const LineObs& b) { return a.id < b.id; });

    StereoFrame frame;
    frame.index = static_cast<std::size_t>(k);
    frame.timestamp = scene.timestamps[static_cast<std::size_t>(k)];
    FrameLabels labels;
    for (const auto& o : points) {
      const Vec3 pc = tcw * o.world;
      const Vec2 px = cam.project(pc);
      const double ur = cam.project_right_u(pc);
      PointFeature2D f{o.id, px.x(), px.y(), std::nullopt};
      double right = ur;
      add_noise(f.u, spec.noise_sigma, rng);
      add_noise(f.v, spec.noise_sigma, rng);
      add_noise(right, spec.noise_sigma, rng);
      if (ur >= 0.0 && ur < cam.width) f.disparity = f.u - right;
      frame.points.push_back(f);
      labels.points[o.id] = o.label;
    }
    for (const auto& o : lines) {
      const Vec3 s = tcw * o.world.start;
      const Vec3 e = tcw * o.world.end;
      StereoLineFeature f;
      f.left = {o.id, cam.project(s), cam.project(e)};
      LineFeature2D right{o.id, Vec2(cam.project_right_u(s), f.left.start.y()),
                          Vec2(cam.project_right_u(e), f.left.end.y())};
      const bool matched = right.start.x() >= 0.0 && right.end.x() >= 0.0 && right.start.x() < cam.width &&
                           right.end.x() < cam.width;
      for (double* c : {&f.left.start.x(), &f.left.start.y(), &f.left.end.x(), &f.left.end.y(), &right.start.x(),
                        &right.start.y(), &right.end.x(), &right.end.y()}) {
        add_noise(*c, spec.noise_sigma, rng);
      }
      if (matched) f.right = right;
      frame.lines.push_back(f);
      labels.lines[o.id] = o.label;
    }

    const std::size_t total = frame.points.size() + frame.lines.size();
    const auto outliers = static_cast<std::size_t>(std::floor(spec.outlier_rate * static_cast<double>(total)));
    if (outliers > 0) {
      std::vector<std::size_t> order(total);
      for (std::size_t i = 0; i < total; ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t j = 0; j < outliers; ++j) {
        const std::size_t i = order[j];
        if (i < frame.points.size()) {
          auto& f = frame.points[i];
          f.u = pu(rng);
          f.v = pv(rng);
          labels.points[f.id] = FeatureLabel::outlier;
        } else {
          auto& f = frame.lines[i - frame.points.size()];
          const Vec2 s(pu(rng), pv(rng));
          const double a = 2.0 * kPi * unit(rng);
          const double len = 30.0 + 120.0 * unit(rng);
          Vec2 e = s + len * Vec2(std::cos(a), std::sin(a));
          e.x() = std::clamp(e.x(), 0.0, spec.width - 1.0);
          e.y() = std::clamp(e.y(), 0.0, spec.height - 1.0);
          const Vec2 shift = f.left.start - s;
          f.left.start = s;
          f.left.end = e;
          if (f.right) {
            f.right->start -= shift;
            f.right->end = f.right->start + (e - s);
          }
          labels.lines[f.left.id] = FeatureLabel::outlier;
        }
      }
    }
    scene.frames.push_back(std::move(frame));
    scene.labels.push_back(std::move(labels));
  }
  scene.static_points.insert(point_pool.begin(), point_pool.end());
  scene.static_lines.insert(line_pool.begin(), line_pool.end());
  return scene;
}

GrayImage render_frame(const SyntheticScene& scene, std::size_t frame) {
  return render(scene.spec, scene.world_from_camera.at(frame), body_states(scene, frame));
}

GrayImage render_view(const SceneSpec& spec, const PoseSE3& world_from_camera) {
  return render(spec, world_from_camera, {});
}

void write_sequence(const SyntheticScene& scene, const fs::path& dir, bool images) {
  fs::create_directories(dir / "features");
  fs::create_directories(dir / "labels");
  write_calibration(dir / "calib.txt", scene.cam);
  for (std::size_t k = 0; k < scene.frames.size(); ++k) {
    const std::string stem = frame_file_stem(scene.frames[k].index);
    write_feature_file(dir / "features" / (stem + ".feat"), scene.frames[k]);
    write_labels(dir / "labels" / (stem + ".gt"), scene.labels[k]);
  }
  write_tum_file(dir / "groundtruth.txt", scene.ground_truth());
  if (images) {
    fs::create_directories(dir / "image_0");
    for (std::size_t k = 0; k < scene.frames.size(); ++k) {
      write_pgm(dir / "image_0" / (frame_file_stem(scene.frames[k].index) + ".pgm"), render_frame(scene, k));
    }
  }
}

}  // namespace dynpl
