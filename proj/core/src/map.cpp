#include "dynpl/map.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "dynpl/text.hpp"

namespace dynpl {

namespace {

constexpr double kMinDepth = 1e-6;

std::optional<double> point_error(const Vec3& world, const PointFeature2D& f, const PoseSE3& camera_from_world,
                                  const StereoCamera& cam) {
  const Vec3 c = camera_from_world * world;
  if (c.z() <= kMinDepth) return std::nullopt;
  return (cam.project(c) - f.pixel()).norm();
}

std::optional<double> line_error(const Landmark3D& world, const LineFeature2D& f,
                                 const PoseSE3& camera_from_world, const StereoCamera& cam) {
  const auto r = line_vertical_residual(world, f, camera_from_world, cam);
  if (!r) return std::nullopt;
  return r->value.cwiseAbs().maxCoeff();
}

}  // namespace

const PointFeature2D* KeyFrame::point_feature(FeatureId id) const {
  auto it = std::lower_bound(features.points.begin(), features.points.end(), id,
                             [](const PointFeature2D& p, FeatureId v) { return p.id < v; });
  return it != features.points.end() && it->id == id ? &*it : nullptr;
}

const StereoLineFeature* KeyFrame::line_feature(FeatureId id) const {
  auto it = std::lower_bound(features.lines.begin(), features.lines.end(), id,
                             [](const StereoLineFeature& l, FeatureId v) { return l.left.id < v; });
  return it != features.lines.end() && it->left.id == id ? &*it : nullptr;
}

// ---------------------------------------------------------------------------

void CovisibilityGraph::add_node(KeyFrameId id) { nodes_.insert(id); }

void CovisibilityGraph::increment(KeyFrameId a, KeyFrameId b) {
  if (a == b) return;
  ++counts_[a][b];
  ++counts_[b][a];
}

void CovisibilityGraph::decrement(KeyFrameId a, KeyFrameId b) {
  if (a == b) return;
  auto drop = [&](KeyFrameId x, KeyFrameId y) {
    auto it = counts_.find(x);
    if (it == counts_.end()) return;
    auto jt = it->second.find(y);
    if (jt == it->second.end()) return;
    if (--jt->second <= 0) it->second.erase(jt);
  };
  drop(a, b);
  drop(b, a);
}

int CovisibilityGraph::shared(KeyFrameId a, KeyFrameId b) const {
  auto it = counts_.find(a);
  if (it == counts_.end()) return 0;
  auto jt = it->second.find(b);
  return jt == it->second.end() ? 0 : jt->second;
}

int CovisibilityGraph::weight(KeyFrameId a, KeyFrameId b) const {
  const int s = shared(a, b);
  return s >= min_shared_ ? s : 0;
}

std::vector<KeyFrameId> CovisibilityGraph::neighbors(KeyFrameId id) const {
  std::vector<KeyFrameId> out;
  auto it = counts_.find(id);
  if (it == counts_.end()) return out;
  for (const auto& [other, count] : it->second) {
    if (count >= min_shared_) out.push_back(other);
  }
  return out;
}

std::vector<std::pair<KeyFrameId, KeyFrameId>> CovisibilityGraph::edges() const {
  std::vector<std::pair<KeyFrameId, KeyFrameId>> out;
  for (const auto& [a, row] : counts_) {
    for (const auto& [b, count] : row) {
      if (a < b && count >= min_shared_) out.emplace_back(a, b);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

LocalMap::LocalMap(const StereoCamera& cam, MapOptions options)
    : cam_(cam), options_(options), covis_(options.covisibility_min) {}

void LocalMap::add_point_observation(KeyFrameId kf, FeatureId id) {
  auto& lm = points_.at(id);
  if (!lm.observers.insert(kf).second) return;
  for (auto o : lm.observers) covis_.increment(kf, o);
  keyframes_[kf].point_ids.insert(id);
}

void LocalMap::add_line_observation(KeyFrameId kf, FeatureId id) {
  auto& lm = lines_.at(id);
  if (!lm.observers.insert(kf).second) return;
  for (auto o : lm.observers) covis_.increment(kf, o);
  keyframes_[kf].line_ids.insert(id);
}

void LocalMap::remove_point_observation(KeyFrameId kf, FeatureId id) {
  auto& lm = points_.at(id);
  if (!lm.observers.erase(kf)) return;
  for (auto o : lm.observers) covis_.decrement(kf, o);
  keyframes_[kf].point_ids.erase(id);
}

void LocalMap::remove_line_observation(KeyFrameId kf, FeatureId id) {
  auto& lm = lines_.at(id);
  if (!lm.observers.erase(kf)) return;
  for (auto o : lm.observers) covis_.decrement(kf, o);
  keyframes_[kf].line_ids.erase(id);
}

KeyFrameInsertion LocalMap::insert_keyframe(const StereoFrame& frame, const PoseSE3& camera_from_world,
                                            std::optional<GGSDescriptor> ggs,
                                            const std::unordered_set<FeatureId>& excluded_points,
                                            const std::unordered_set<FeatureId>& excluded_lines) {
  KeyFrame kf;
  kf.id = keyframes_.size();
  kf.frame_index = frame.index;
  kf.timestamp = frame.timestamp;
  kf.camera_from_world = camera_from_world;
  kf.features = frame;
  kf.ggs = std::move(ggs);
  std::sort(kf.features.points.begin(), kf.features.points.end(),
            [](const PointFeature2D& a, const PointFeature2D& b) { return a.id < b.id; });
  std::sort(kf.features.lines.begin(), kf.features.lines.end(),
            [](const StereoLineFeature& a, const StereoLineFeature& b) { return a.left.id < b.left.id; });
  keyframes_.push_back(std::move(kf));
  const KeyFrame& k = keyframes_.back();
  covis_.add_node(k.id);

  KeyFrameInsertion out;
  out.id = k.id;
  const PoseSE3 world_from_camera = camera_from_world.inverse();

  for (const auto& p : k.features.points) {
    if (excluded_points.count(p.id)) continue;
    if (auto it = points_.find(p.id); it != points_.end()) {
      const auto err = point_error(it->second.position, p, camera_from_world, cam_);
      if (err && *err <= options_.association_gate_px) {
        add_point_observation(k.id, p.id);
        ++out.associated_points;
      }
      continue;
    }
    const auto xc = triangulate_point(p, cam_, options_.min_disparity);
    if (!xc) continue;
    points_.emplace(p.id, MapPoint{world_from_camera * *xc, k.id, {}});
    add_point_observation(k.id, p.id);
    ++out.new_points;
  }

  if (!options_.use_lines) return out;
  for (const auto& l : k.features.lines) {
    const FeatureId id = l.left.id;
    if (excluded_lines.count(id)) continue;
    if (auto it = lines_.find(id); it != lines_.end()) {
      const auto err = line_error(it->second.line, l.left, camera_from_world, cam_);
      if (err && *err <= options_.association_gate_px) {
        add_line_observation(k.id, id);
        ++out.associated_lines;
      }
      continue;
    }
    if (!l.right) continue;
    const auto lc = triangulate_line(l.left, *l.right, cam_, options_.min_disparity);
    if (!lc) continue;
    lines_.emplace(id, MapLine{lc->transformed(world_from_camera), k.id, {}});
    add_line_observation(k.id, id);
    ++out.new_lines;
  }
  return out;
}

int LocalMap::count_shared(KeyFrameId a, KeyFrameId b) const {
  if (a == b) return 0;
  const auto& ka = keyframes_.at(a);
  const auto& kb = keyframes_.at(b);
  int n = 0;
  for (auto id : ka.point_ids) n += kb.point_ids.count(id) ? 1 : 0;
  for (auto id : ka.line_ids) n += kb.line_ids.count(id) ? 1 : 0;
  return n;
}

BAReport LocalMap::run_ba(const std::vector<KeyFrameId>& free, const std::set<KeyFrameId>& fixed,
                          const std::vector<KeyFrameId>& landmark_sources, int iterations) {
  BAProblem problem;
  std::map<KeyFrameId, std::size_t> pose_index;
  for (auto id : free) {
    pose_index.emplace(id, problem.poses.size());
    problem.poses.push_back(keyframes_[id].camera_from_world);
    problem.pose_fixed.push_back(false);
  }
  for (auto id : fixed) {
    if (pose_index.count(id)) continue;
    pose_index.emplace(id, problem.poses.size());
    problem.poses.push_back(keyframes_[id].camera_from_world);
    problem.pose_fixed.push_back(true);
  }

  std::set<FeatureId> point_ids;
  std::set<FeatureId> line_ids;
  for (auto id : landmark_sources) {
    point_ids.insert(keyframes_[id].point_ids.begin(), keyframes_[id].point_ids.end());
    line_ids.insert(keyframes_[id].line_ids.begin(), keyframes_[id].line_ids.end());
  }

  std::vector<FeatureId> point_order(point_ids.begin(), point_ids.end());
  std::vector<FeatureId> line_order(line_ids.begin(), line_ids.end());
  for (auto id : point_order) {
    const auto& lm = points_.at(id);
    const std::size_t li = problem.points.size();
    problem.points.push_back(lm.position);
    for (auto kf : lm.observers) {
      auto pit = pose_index.find(kf);
      if (pit == pose_index.end()) continue;
      const auto* f = keyframes_[kf].point_feature(id);
      if (!f) continue;
      BAPointObservation o{pit->second, li, f->pixel(), std::nullopt};
      if (f->disparity && *f->disparity > options_.min_disparity) o.right_u = f->u - *f->disparity;
      problem.point_observations.push_back(o);
    }
  }
  for (auto id : line_order) {
    const auto& lm = lines_.at(id);
    const std::size_t li = problem.lines.size();
    problem.lines.push_back(lm.line);
    for (auto kf : lm.observers) {
      auto pit = pose_index.find(kf);
      if (pit == pose_index.end()) continue;
      const auto* f = keyframes_[kf].line_feature(id);
      if (!f) continue;
      problem.line_observations.push_back({pit->second, li, f->left, f->right});
    }
  }

  BAOptions opts = options_.ba;
  opts.max_iterations = iterations;
  BAReport report = bundle_adjust(problem, cam_, opts);
  if (!report.ran) return report;

  for (auto id : free) keyframes_[id].camera_from_world = problem.poses[pose_index.at(id)];
  for (std::size_t i = 0; i < point_order.size(); ++i) points_.at(point_order[i]).position = problem.points[i];
  for (std::size_t i = 0; i < line_order.size(); ++i) {
    auto& l = lines_.at(line_order[i]).line;
    l.start = problem.lines[i].start;
    l.end = problem.lines[i].end;
  }
  return report;
}

BAReport LocalMap::local_bundle_adjust(KeyFrameId anchor) {
  std::set<KeyFrameId> hood{anchor};
  for (auto n : covis_.neighbors(anchor)) hood.insert(n);
  if (hood.size() < 2) {
    BAReport r;
    r.diagnostic = "fewer than 2 keyframes in the covisible neighbourhood";
    return r;
  }
  const KeyFrameId gauge = *hood.begin();
  std::vector<KeyFrameId> free(std::next(hood.begin()), hood.end());
  std::set<KeyFrameId> fixed{gauge};
  // Landmarks seen anywhere in the neighbourhood are optimized; their other
  // observers constrain them as fixed poses.
  std::vector<KeyFrameId> all(hood.begin(), hood.end());
  for (auto kf : all) {
    for (auto id : keyframes_[kf].point_ids) {
      for (auto o : points_.at(id).observers) {
        if (!hood.count(o)) fixed.insert(o);
      }
    }
    for (auto id : keyframes_[kf].line_ids) {
      for (auto o : lines_.at(id).observers) {
        if (!hood.count(o)) fixed.insert(o);
      }
    }
  }
  return run_ba(free, fixed, all, options_.local_ba_iterations);
}

BAReport LocalMap::global_bundle_adjust() {
  if (keyframes_.size() < 2) {
    BAReport r;
    r.diagnostic = "fewer than 2 keyframes";
    return r;
  }
  std::vector<KeyFrameId> free;
  for (std::size_t i = 1; i < keyframes_.size(); ++i) free.push_back(i);
  std::vector<KeyFrameId> sources(free);
  sources.insert(sources.begin(), 0);
  return run_ba(free, {0}, sources, options_.global_ba_iterations);
}

void LocalMap::apply_pose_corrections(const std::vector<PoseSE3>& camera_from_world) {
  if (camera_from_world.size() != keyframes_.size()) {
    throw std::invalid_argument("pose correction count does not match keyframe count");
  }
  std::vector<PoseSE3> delta(keyframes_.size());
  for (std::size_t i = 0; i < keyframes_.size(); ++i) {
    delta[i] = camera_from_world[i].inverse() * keyframes_[i].camera_from_world;
  }
  for (auto& [id, p] : points_) p.position = delta[p.anchor] * p.position;
  for (auto& [id, l] : lines_) l.line = l.line.transformed(delta[l.anchor]);
  for (std::size_t i = 0; i < keyframes_.size(); ++i) keyframes_[i].camera_from_world = camera_from_world[i];
}

std::size_t LocalMap::cull() {
  const double gate = options_.association_gate_px;
  std::vector<std::pair<KeyFrameId, FeatureId>> drop_points;
  std::vector<std::pair<KeyFrameId, FeatureId>> drop_lines;
  for (const auto& [id, lm] : points_) {
    for (auto kf : lm.observers) {
      const auto* f = keyframes_[kf].point_feature(id);
      const auto err = f ? point_error(lm.position, *f, keyframes_[kf].camera_from_world, cam_) : std::nullopt;
      if (!err || *err > gate) drop_points.emplace_back(kf, id);
    }
  }
  for (const auto& [id, lm] : lines_) {
    for (auto kf : lm.observers) {
      const auto* f = keyframes_[kf].line_feature(id);
      const auto err = f ? line_error(lm.line, f->left, keyframes_[kf].camera_from_world, cam_) : std::nullopt;
      if (!err || *err > gate) drop_lines.emplace_back(kf, id);
    }
  }
  for (auto [kf, id] : drop_points) remove_point_observation(kf, id);
  for (auto [kf, id] : drop_lines) remove_line_observation(kf, id);

  std::size_t removed = 0;
  for (auto it = points_.begin(); it != points_.end();) {
    if (it->second.observers.empty()) {
      it = points_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  for (auto it = lines_.begin(); it != lines_.end();) {
    if (it->second.observers.empty()) {
      it = lines_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

void LocalMap::write_dump(std::ostream& out) const {
  for (const auto& kf : keyframes_) {
    const Eigen::Matrix4d m = kf.world_from_camera().matrix();
    out << "KF " << kf.id;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) out << ' ' << format_double(m(r, c));
    }
    out << '\n';
  }
  for (const auto& [id, p] : points_) {
    out << "LM " << id << " point";
    for (int i = 0; i < 3; ++i) out << ' ' << format_double(p.position(i));
    out << '\n';
  }
  for (const auto& [id, l] : lines_) {
    out << "LM " << id << " line";
    for (int i = 0; i < 3; ++i) out << ' ' << format_double(l.line.start(i));
    for (int i = 0; i < 3; ++i) out << ' ' << format_double(l.line.end(i));
    out << '\n';
  }
}

}  // namespace dynpl
