#include "dynpl/loop_closure.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "dynpl/text.hpp"

namespace dynpl {

std::vector<RankedKeyFrame> find_loop_candidates(const GGSDescriptor& current,
                                                 const std::vector<const GGSDescriptor*>& history,
                                                 double sim_threshold, std::size_t exclusion_window) {
  std::vector<RankedKeyFrame> out;
  if (history.size() <= exclusion_window) return out;
  const std::size_t searchable = history.size() - exclusion_window;
  for (std::size_t j = 0; j < searchable; ++j) {
    if (!history[j]) continue;
    const double s = ggs_dissimilarity(current, *history[j]);
    if (s < sim_threshold) out.push_back({j, s});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedKeyFrame& a, const RankedKeyFrame& b) { return a.sim_v < b.sim_v; });
  return out;
}

LoopCandidate verify_candidate(const LocalMap& map, KeyFrameId current, KeyFrameId looped, double sim_v,
                               double sim_threshold, const LoopOptions& options) {
  const StereoCamera& cam = map.camera();
  const KeyFrame& cur = map.keyframe(current);
  const KeyFrame& lp = map.keyframe(looped);

  LoopCandidate c;
  c.current = current;
  c.looped = looped;
  c.sim_v = sim_v;
  c.relative = cur.camera_from_world * lp.camera_from_world.inverse();

  const auto matches = match_points_by_id(lp.features.points, cur.features.points, cam.width, cam.height);
  if (matches.size() < options.min_matches) {
    c.reason = "too few matches";
    return c;
  }
  const auto filtered = filter_point_matches(matches, options.point_filter);
  std::vector<PointCorrespondence> corr;
  for (const auto& m : filtered.inliers) {
    if (auto x = triangulate_point(m.prev, cam)) corr.push_back({m.curr.id, *x, m.curr.pixel()});
  }
  const PoseEstimate est = estimate_pose(corr, {}, c.relative, cam, options.estimation);
  if (!est.ok()) {
    c.reason = "relative pose unsolvable";
    return c;
  }
  c.measured = est.camera_from_ref;

  std::size_t inliers = 0;
  for (const auto& m : matches) {
    const auto x = triangulate_point(m.prev, cam);
    if (!x) continue;
    const Vec3 p = c.measured * *x;
    if (p.z() <= 0.0) continue;
    if ((cam.project(p) - m.curr.pixel()).norm() < options.loop_inlier_px) ++inliers;
  }
  c.ratio_inl = static_cast<double>(inliers) / static_cast<double>(matches.size());
  const double drift = se3_log(c.relative).norm();
  c.lc_rat = options.lc_alpha * drift * c.ratio_inl;

  if (c.ratio_inl < options.inlier_min) {
    c.reason = "inlier ratio below minimum";
    return c;
  }
  if (options.strict_paper) {
    if (c.lc_rat < options.lc_rat_min) {
      c.reason = "lc_rat below minimum";
      return c;
    }
  } else {
    double path = 0.0;
    for (KeyFrameId k = looped; k < current; ++k) {
      path += (map.keyframe(k + 1).world_from_camera().translation() -
               map.keyframe(k).world_from_camera().translation())
                  .norm();
    }
    if (drift > options.max_drift_fraction * path) {
      c.reason = "relative transform exceeds drift bound";
      return c;
    }
  }

  if (!cur.ggs) {
    c.reason = "current keyframe has no descriptor";
    return c;
  }
  const double bound = options.neighbor_factor * std::max(sim_v, sim_threshold);
  for (KeyFrameId n : {looped - 1, looped + 1}) {
    if (n >= current) continue;  // also skips the wrapped looped - 1 at 0
    const auto& nk = map.keyframe(n);
    if (!nk.ggs) continue;
    if (!(ggs_dissimilarity(*cur.ggs, *nk.ggs) < bound)) {
      c.reason = "neighbour similarity inconsistent";
      return c;
    }
  }
  c.accepted = true;
  return c;
}

PoseGraph build_loop_pose_graph(const LocalMap& map, const LoopCandidate& loop, const LoopOptions& options) {
  const auto& kfs = map.keyframes();
  PoseGraph g;
  g.poses.reserve(kfs.size());
  for (const auto& kf : kfs) g.poses.push_back(kf.world_from_camera());
  g.fixed.assign(kfs.size(), false);
  if (!g.fixed.empty()) g.fixed[0] = true;

  auto relative = [&](std::size_t a, std::size_t b) { return g.poses[a].inverse() * g.poses[b]; };
  for (std::size_t k = 0; k + 1 < kfs.size(); ++k) {
    g.edges.push_back({k, k + 1, relative(k, k + 1), Mat6::Identity(), PoseGraphEdgeKind::odometry});
  }
  const auto& covis = map.covisibility();
  for (std::size_t a = 0; a < kfs.size(); ++a) {
    const double na = static_cast<double>(kfs[a].point_ids.size() + kfs[a].line_ids.size());
    for (std::size_t b = a + 2; b < kfs.size(); ++b) {
      const int shared = covis.shared(a, b);
      if (shared == 0) continue;
      const double nb = static_cast<double>(kfs[b].point_ids.size() + kfs[b].line_ids.size());
      if (shared >= options.pgo_covisibility_ratio * std::min(na, nb)) {
        g.edges.push_back({a, b, relative(a, b), Mat6::Identity(), PoseGraphEdgeKind::covisibility});
      }
    }
  }
  g.edges.push_back({loop.looped, loop.current, loop.measured.inverse(), Mat6::Identity(),
                     PoseGraphEdgeKind::loop});
  return g;
}

LoopCorrection correct_loop(LocalMap& map, const LoopCandidate& loop, const LoopOptions& options) {
  LoopCorrection out;
  PoseGraph g = build_loop_pose_graph(map, loop, options);
  out.report = optimize_pose_graph(g);
  if (out.report.diverged) {
    out.diagnostic = "pose graph optimization diverged, loop discarded";
    return out;
  }
  std::vector<PoseSE3> camera_from_world;
  camera_from_world.reserve(g.poses.size());
  for (const auto& p : g.poses) camera_from_world.push_back(p.inverse());
  map.apply_pose_corrections(camera_from_world);
  out.applied = true;
  return out;
}

double LoopDetector::sim_threshold() const {
  if (consecutive_.empty()) return std::numeric_limits<double>::infinity();
  std::vector<double> v = consecutive_;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  return options_.sim_factor * median;
}

std::vector<LoopCandidate> LoopDetector::detect(const LocalMap& map, KeyFrameId current) const {
  std::vector<LoopCandidate> out;
  const KeyFrame& cur = map.keyframe(current);
  if (!cur.ggs) return out;
  std::vector<const GGSDescriptor*> history;
  history.reserve(current);
  for (KeyFrameId k = 0; k < current; ++k) {
    const auto& kf = map.keyframe(k);
    history.push_back(kf.ggs ? &*kf.ggs : nullptr);
  }
  const double threshold = sim_threshold();
  const auto ranked = find_loop_candidates(*cur.ggs, history, threshold, options_.exclusion_window);
  for (std::size_t i = 0; i < ranked.size() && i < options_.max_candidates; ++i) {
    out.push_back(verify_candidate(map, current, ranked[i].id, ranked[i].sim_v, threshold, options_));
    if (out.back().accepted) break;
  }
  return out;
}

void write_loop_csv_header(std::ostream& out) {
  out << "current_kf,looped_kf,sim_v,ratio_inl,lc_rat,accepted\n";
}

void write_loop_csv(std::ostream& out, const LoopCandidate& c) {
  out << c.current << ',' << c.looped << ',' << format_double(c.sim_v) << ',' << format_double(c.ratio_inl)
      << ',' << format_double(c.lc_rat) << ',' << (c.accepted ? 1 : 0) << '\n';
}

}  // namespace dynpl
