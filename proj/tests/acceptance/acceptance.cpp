// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dynpl/association.hpp"
#include "dynpl/bundle_adjustment.hpp"
#include "dynpl/ggs.hpp"
#include "dynpl/loop_closure.hpp"
#include "dynpl/pose_estimation.hpp"
#include "dynpl/pose_graph.hpp"
#include "dynpl/residuals.hpp"
#include "dynpl/synthetic.hpp"
#include "dynpl/system.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dynpl;

namespace {

// Tolerances and budgets.
constexpr double kAteMargin = 0.20;
constexpr double kDynamicRuntimeBudget = 60.0;  // s
constexpr double kJacobianRelTol = 1e-6;
constexpr int kJacobianSamples = 1000;
constexpr double kJacobianRuntimeBudget = 10.0;
constexpr double kRecoveryTransTol = 1e-6;  // m
constexpr double kRecoveryRotTol = 1e-8;    // rad
constexpr int kRecoveryFrames = 100;
constexpr double kRecoveryRuntimeBudget = 30.0;
constexpr int kFilterFixtures = 100;
constexpr int kLlgLines = 50;
constexpr double kDynamicRecall = 0.90;
constexpr double kStaticRetention = 0.95;
constexpr double kDynamicsRuntimeBudget = 30.0;
constexpr double kPlaceRecognitionRate = 0.95;
constexpr int kPlaceTolerance = 2;  // keyframes
constexpr double kLoopAteRatio = 0.5;
constexpr double kNoOpTol = 1e-9;
constexpr double kBaRmsTol = 1e-6;  // px
constexpr double kMinFps = 30.0;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

// Shared dynamic fixture: generated and rendered once.
struct DynamicRuns {
  SyntheticScene scene;
  std::vector<FrameInput> frames;
  RunResult with_dynamic;
  RunResult without_dynamic;
  double ate_with = 0.0;
  double ate_without = 0.0;
};

DynamicRuns& dynamic_runs() {
  static DynamicRuns runs = [] {
    DynamicRuns r;
    r.scene = generate_scene(fixtures::dynamic_spec(), fixtures::kDynamicSeed);
    r.frames = fixtures::prerender(r.scene, true);
    const MemorySource source(r.scene.cam, r.frames);
    RunConfig on;
    RunConfig off;
    off.enable_dynamic = false;
    r.with_dynamic = run_pipeline(source, on);
    r.without_dynamic = run_pipeline(source, off);
    const Trajectory gt = r.scene.ground_truth();
    r.ate_with = evaluate_trajectory(r.with_dynamic.trajectory, gt).ate_rmse;
    r.ate_without = evaluate_trajectory(r.without_dynamic.trajectory, gt).ate_rmse;
    return r;
  }();
  return runs;
}

void criterion_1() {
  const auto& r = dynamic_runs();
  const double runtime = r.with_dynamic.seconds + r.without_dynamic.seconds;
  const bool pass = r.ate_with < (1.0 - kAteMargin) * r.ate_without && runtime < kDynamicRuntimeBudget;
  report(1, "dynamic rejection lowers ATE by >= 20%", pass,
         fmt("ATE on %.4f m", r.ate_with) + fmt(", off %.4f m", r.ate_without) +
             fmt(", reduction %.1f%%", 100.0 * (1.0 - r.ate_with / r.ate_without)) + fmt(", runtime %.1f s", runtime));
}

// ---------------------------------------------------------------------------

template <typename F>
Eigen::MatrixXd central_difference(F f, int rows, int dim, double h) {
  Eigen::MatrixXd j(rows, dim);
  for (int i = 0; i < dim; ++i) {
    j.col(i) = (f(i, h) - f(i, -h)) / (2.0 * h);
  }
  return j;
}

double rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

void criterion_2() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const StereoCamera cam = fixtures::dynamic_spec().camera();
  const double h = 1e-6;
  double worst = 0.0;
  int samples = 0;
  const auto random_pose = [&] {
    Vec6 xi;
    for (int i = 0; i < 3; ++i) xi[i] = u(rng);
    for (int i = 3; i < 6; ++i) xi[i] = 0.3 * u(rng);
    return se3_exp(xi);
  };
  const auto in_front = [&](const PoseSE3& t) {
    const Vec3 pc(4.0 * u(rng), 1.5 * u(rng), 8.0 + 6.0 * u(rng));
    return t.inverse() * pc;
  };
  const auto bump = [](const PoseSE3& t, int i, double s) {
    Vec6 d = Vec6::Zero();
    d[i] = s;
    return se3_exp(d) * t;
  };
  while (samples < kJacobianSamples) {
    const PoseSE3 t = random_pose();
    // Point block.
    const Vec3 p = in_front(t);
    const Vec2 obs = cam.project(t * p) + Vec2(3.0 * u(rng), 3.0 * u(rng));
    const auto pr = point_residual(p, obs, t, cam);
    // Line blocks.
    const Landmark3D line = Landmark3D::line(in_front(t), in_front(t));
    LineFeature2D det{1, cam.project(t * line.start) + Vec2(2.0 * u(rng), 2.0 * u(rng)),
                      cam.project(t * line.end) + Vec2(2.0 * u(rng), 2.0 * u(rng))};
    const auto lv = line_vertical_residual(line, det, t, cam);
    const auto lh = line_horizontal_residual(line, det, t, cam);
    if (!pr || !lv || !lh || det.length() < 20.0) continue;

    const auto pose_fd_p = [&](int i, double s) -> Eigen::VectorXd { return point_residual(p, obs, bump(t, i, s), cam)->value; };
    const auto point_fd = [&](int i, double s) -> Eigen::VectorXd {
      Vec3 q = p;
      q[i] += s;
      return point_residual(q, obs, t, cam)->value;
    };
    const auto pose_fd_v = [&](int i, double s) -> Eigen::VectorXd {
      return line_vertical_residual(line, det, bump(t, i, s), cam)->value;
    };
    const auto line_fd_v = [&](int i, double s) -> Eigen::VectorXd {
      Landmark3D l = line;
      (i < 3 ? l.start : l.end)[i % 3] += s;
      return line_vertical_residual(l, det, t, cam)->value;
    };
    const auto pose_fd_h = [&](int i, double s) -> Eigen::VectorXd {
      return Eigen::VectorXd::Constant(1, line_horizontal_residual(line, det, bump(t, i, s), cam)->value);
    };
    const auto line_fd_h = [&](int i, double s) -> Eigen::VectorXd {
      Landmark3D l = line;
      (i < 3 ? l.start : l.end)[i % 3] += s;
      return Eigen::VectorXd::Constant(1, line_horizontal_residual(l, det, t, cam)->value);
    };
    worst = std::max({worst, rel_error(pr->d_pose, central_difference(pose_fd_p, 2, 6, h)),
                      rel_error(pr->d_point, central_difference(point_fd, 2, 3, h)),
                      rel_error(lv->d_pose, central_difference(pose_fd_v, 2, 6, h)),
                      rel_error(lv->d_line, central_difference(line_fd_v, 2, 6, h)),
                      rel_error(lh->d_pose, central_difference(pose_fd_h, 1, 6, h)),
                      rel_error(lh->d_line, central_difference(line_fd_h, 1, 6, h))});
    ++samples;
  }
  const double runtime = seconds_since(t0);
  report(2, "residual Jacobians match central differences", worst < kJacobianRelTol && runtime < kJacobianRuntimeBudget,
         fmt("%.0f samples x 3 blocks", samples) + fmt(", worst relative error %.2e", worst) +
             fmt(", runtime %.2f s", runtime));
}

// ---------------------------------------------------------------------------

void criterion_3() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const StereoCamera cam = fixtures::dynamic_spec().camera();
  double worst_t = 0.0;
  double worst_r = 0.0;
  int lost = 0;
  for (int f = 0; f < kRecoveryFrames; ++f) {
    Vec6 xi;
    for (int i = 0; i < 3; ++i) xi[i] = 0.8 * u(rng);
    for (int i = 3; i < 6; ++i) xi[i] = 0.1 * u(rng);
    const PoseSE3 truth = se3_exp(xi);
    std::vector<PointCorrespondence> pts;
    std::vector<LineCorrespondence> lines;
    const auto sample = [&]() -> std::optional<Vec3> {
      const Vec3 p(10.0 * u(rng), 3.0 * u(rng), 15.0 + 10.0 * u(rng));
      const Vec3 c = truth * p;
      if (c.z() < 1.0 || !cam.in_image(cam.project(c))) return std::nullopt;
      return p;
    };
    while (pts.size() < 60) {
      if (auto p = sample()) pts.push_back({static_cast<FeatureId>(pts.size()), *p, cam.project(truth * *p)});
    }
    while (lines.size() < 20) {
      const auto a = sample();
      const auto b = sample();
      if (!a || !b) continue;
      LineFeature2D det{static_cast<FeatureId>(lines.size()), cam.project(truth * *a), cam.project(truth * *b)};
      if (det.length() < 20.0) continue;
      lines.push_back({det.id, Landmark3D::line(*a, *b), det});
    }
    const PoseEstimate e = estimate_pose(pts, lines, PoseSE3::identity(), cam);
    if (!e.ok()) ++lost;
    worst_t = std::max(worst_t, (e.camera_from_ref.translation() - truth.translation()).norm());
    worst_r = std::max(worst_r, rotation_angle_between(e.camera_from_ref.rotation(), truth.rotation()));
  }
  const double runtime = seconds_since(t0);
  report(3, "zero-noise pose recovery", lost == 0 && worst_t < kRecoveryTransTol && worst_r < kRecoveryRotTol &&
                                            runtime < kRecoveryRuntimeBudget,
         fmt("%.0f frames", kRecoveryFrames) + fmt(", worst translation %.2e m", worst_t) +
             fmt(", worst rotation %.2e rad", worst_r) + fmt(", lost %.0f", lost) + fmt(", runtime %.2f s", runtime));
}

// ---------------------------------------------------------------------------

void criterion_4() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const int w = 1242;
  const int h = 376;
  int point_ok = 0;
  int line_ok = 0;
  int llg_ok = 0;
  for (int f = 0; f < kFilterFixtures; ++f) {
    // Points: clustered and scattered, a rigid image motion, noise and gross errors.
    const int count = 40 + static_cast<int>(u(rng) * 300);
    const double angle = 0.05 * n(rng);
    const Vec2 shift(20.0 * n(rng), 5.0 * n(rng));
    std::vector<PointFeature2D> prev;
    std::vector<PointFeature2D> curr;
    for (int k = 0; k < count; ++k) {
      Vec2 p(u(rng) * w, u(rng) * h);
      if (k % 3 == 0 && k > 0) p = prev[k - 1].pixel() + Vec2(6.0 * n(rng), 3.0 * n(rng));
      p = p.cwiseMax(Vec2(0, 0)).cwiseMin(Vec2(w - 1, h - 1));
      Vec2 c = Eigen::Rotation2Dd(angle) * p + shift + Vec2(0.5 * n(rng), 0.5 * n(rng));
      if (u(rng) < 0.1) c += Vec2(40.0 * n(rng), 40.0 * n(rng));
      prev.push_back({k, p.x(), p.y(), std::nullopt});
      curr.push_back({k, c.x(), c.y(), std::nullopt});
    }
    const auto matches = match_points_by_id(prev, curr, w, h);
    const auto res = filter_point_matches(matches);
    std::set<FeatureId> impl;
    for (const auto& m : res.outliers) impl.insert(m.curr.id);
    std::vector<oracle::RawPointMatch> raw;
    for (int k = 0; k < count; ++k) raw.push_back({k, prev[k].pixel(), curr[k].pixel()});
    point_ok += impl == oracle::point_filter_outliers(raw, w, h, kDefaultPointAlpha, kDefaultPointEpsilon) ? 1 : 0;

    // Lines.
    std::vector<LineFeature2D> lp;
    std::vector<LineFeature2D> lc;
    std::vector<std::pair<LineFeature2D, LineFeature2D>> pairs;
    for (int k = 0; k < kLlgLines; ++k) {
      const Vec2 s(u(rng) * w, u(rng) * h);
      const double a = u(rng) * std::numbers::pi;
      const double len = 15.0 + 120.0 * u(rng);
      const LineFeature2D p{k, s, s + len * Vec2(std::cos(a), std::sin(a))};
      const Vec2 d(10.0 + 2.0 * n(rng), 1.0 * n(rng));
      LineFeature2D c{k, p.start + d, p.end + d + Vec2(1.5 * n(rng), 1.5 * n(rng))};
      if (u(rng) < 0.1) c.end += Vec2(30.0 * n(rng), 30.0 * n(rng));
      lp.push_back(p);
      if (u(rng) < 0.9) {
        lc.push_back(c);
        pairs.emplace_back(p, c);
      }
    }
    const auto lres = filter_line_matches(match_lines_by_id(lp, lc), build_llgs(lp));
    std::set<FeatureId> limpl;
    for (const auto& m : lres.outliers) limpl.insert(m.curr.id);
    line_ok += limpl == oracle::line_filter_outliers(pairs, lp, kDefaultLineMeanFactor) ? 1 : 0;

    std::vector<std::vector<FeatureId>> groups;
    for (const auto& g : build_llgs(lp)) groups.push_back(g.members);
    llg_ok += groups == oracle::llg_components(lp) ? 1 : 0;
  }
  report(4, "filters and LLGs equal brute-force oracles",
         point_ok == kFilterFixtures && line_ok == kFilterFixtures && llg_ok == kFilterFixtures,
         fmt("point filter %.0f", point_ok) + fmt("/%.0f", kFilterFixtures) + fmt(", line filter %.0f", line_ok) +
             fmt("/%.0f", kFilterFixtures) + fmt(", LLG %.0f", llg_ok) + fmt("/%.0f", kFilterFixtures));
}

// ---------------------------------------------------------------------------

void criterion_5() {
  const auto& r = dynamic_runs();
  std::size_t dyn_total = 0, dyn_flagged = 0, static_total = 0, static_kept = 0;
  for (std::size_t k = 0; k < r.with_dynamic.frames.size(); ++k) {
    const FrameRecord& rec = r.with_dynamic.frames[k];
    if (!rec.dynamics_ran) continue;
    const FrameLabels& labels = r.scene.labels[k];
    for (const auto& [id, label] : labels.points) {
      const bool flagged = rec.dynamic_points.count(id) > 0;
      if (label == FeatureLabel::dynamic_feature) {
        ++dyn_total;
        dyn_flagged += flagged ? 1 : 0;
      } else if (label == FeatureLabel::static_feature) {
        ++static_total;
        static_kept += flagged ? 0 : 1;
      }
    }
    for (const auto& [id, label] : labels.lines) {
      const bool flagged = rec.dynamic_lines.count(id) > 0;
      if (label == FeatureLabel::dynamic_feature) {
        ++dyn_total;
        dyn_flagged += flagged ? 1 : 0;
      } else if (label == FeatureLabel::static_feature) {
        ++static_total;
        static_kept += flagged ? 0 : 1;
      }
    }
  }
  const double recall = dyn_total ? static_cast<double>(dyn_flagged) / dyn_total : 0.0;
  const double retention = static_total ? static_cast<double>(static_kept) / static_total : 0.0;
  double runtime = 0.0;
  for (const auto& t : r.with_dynamic.timings) runtime += t.stage == "tracking" ? t.millis / 1000.0 : 0.0;
  report(5, "dynamic features flagged, static features retained",
         recall >= kDynamicRecall && retention >= kStaticRetention && runtime < kDynamicsRuntimeBudget,
         fmt("recall %.3f", recall) + fmt(" of %.0f dynamic", static_cast<double>(dyn_total)) +
             fmt(", retention %.3f", retention) + fmt(" of %.0f static", static_cast<double>(static_total)) +
             fmt(", tracking time %.2f s", runtime));
}

// ---------------------------------------------------------------------------

void criterion_6() {
  const SceneSpec spec = fixtures::loop_spec();
  const int per_lap = 50;
  const auto poses = fixtures::loop_keyframe_poses(spec, per_lap, 2);
  std::vector<GGSDescriptor> d;
  for (const auto& p : poses) d.push_back(compute_ggs(render_view(spec, p)));
  int queries = 0;
  int hits = 0;
  const std::size_t window = 30;
  for (std::size_t q = per_lap; q < d.size(); ++q) {
    std::vector<const GGSDescriptor*> history;
    for (std::size_t j = 0; j < q; ++j) history.push_back(&d[j]);
    const auto c = find_loop_candidates(d[q], history, std::numeric_limits<double>::infinity(), window);
    ++queries;
    const long truth = static_cast<long>(q) - per_lap;
    if (!c.empty() && std::abs(static_cast<long>(c.front().id) - truth) <= kPlaceTolerance) ++hits;
  }
  bool identity = true;
  bool symmetric = true;
  for (std::size_t a = 0; a < d.size(); ++a) {
    identity = identity && ggs_dissimilarity(d[a], d[a]) == 0.0;
    for (std::size_t b = a + 1; b < d.size(); ++b) {
      symmetric = symmetric && ggs_dissimilarity(d[a], d[b]) == ggs_dissimilarity(d[b], d[a]);
    }
  }
  const double rate = static_cast<double>(hits) / queries;
  report(6, "GGS place recognition", rate >= kPlaceRecognitionRate && identity && symmetric,
         fmt("top hit within +-2 for %.0f", hits) + fmt("/%.0f queries", queries) +
             std::string(identity ? ", sim(a,a)=0" : ", sim(a,a)!=0") + (symmetric ? ", symmetric" : ", asymmetric"));
}

// ---------------------------------------------------------------------------

double graph_ate(const std::vector<PoseSE3>& est, const std::vector<PoseSE3>& gt) {
  Trajectory a;
  Trajectory b;
  for (std::size_t k = 0; k < est.size(); ++k) {
    a.push_back({static_cast<double>(k), est[k]});
    b.push_back({static_cast<double>(k), gt[k]});
  }
  return evaluate_trajectory(a, b).ate_rmse;
}

void criterion_7() {
  SceneSpec spec;
  spec.ring_radius = 20.0;
  const int n = 60;
  std::vector<PoseSE3> gt;
  const double lap = 2.0 * std::numbers::pi * spec.ring_radius;
  for (int k = 0; k < n; ++k) gt.push_back(ring_camera_pose(spec, lap * k / n));

  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 1.0);
  PoseGraph drifted;
  drifted.poses.push_back(gt[0]);
  for (int k = 0; k + 1 < n; ++k) {
    Vec6 bias;
    bias << 0.01, 0.0, 0.02, 0.0, 0.004, 0.0;
    for (int i = 0; i < 6; ++i) bias[i] += 0.002 * noise(rng);
    const PoseSE3 z = gt[k].inverse() * gt[k + 1] * se3_exp(bias);
    drifted.edges.push_back({static_cast<std::size_t>(k), static_cast<std::size_t>(k + 1), z, Mat6::Identity(),
                             PoseGraphEdgeKind::odometry});
    drifted.poses.push_back(drifted.poses.back() * z);
  }
  drifted.edges.push_back({0, static_cast<std::size_t>(n - 1), gt[0].inverse() * gt[n - 1], 100.0 * Mat6::Identity(),
                           PoseGraphEdgeKind::loop});
  drifted.fixed.assign(n, false);
  drifted.fixed[0] = true;
  const double before = graph_ate(drifted.poses, gt);
  const PGOReport rep = optimize_pose_graph(drifted);
  const double after = graph_ate(drifted.poses, gt);

  PoseGraph consistent;
  consistent.poses = gt;
  consistent.fixed.assign(n, false);
  consistent.fixed[0] = true;
  for (int k = 0; k + 1 < n; ++k) {
    consistent.edges.push_back({static_cast<std::size_t>(k), static_cast<std::size_t>(k + 1),
                                gt[k].inverse() * gt[k + 1], Mat6::Identity(), PoseGraphEdgeKind::odometry});
  }
  consistent.edges.push_back({0, static_cast<std::size_t>(n - 1), gt[0].inverse() * gt[n - 1], Mat6::Identity(),
                              PoseGraphEdgeKind::loop});
  optimize_pose_graph(consistent);
  double moved = 0.0;
  for (int k = 0; k < n; ++k) moved = std::max(moved, se3_log(gt[k].inverse() * consistent.poses[k]).norm());

  report(7, "loop correction by pose-graph optimization",
         !rep.diverged && after <= kLoopAteRatio * before && moved <= kNoOpTol,
         fmt("ATE %.4f m", before) + fmt(" -> %.4f m", after) + fmt(", consistent graph moved %.2e", moved));
}

// ---------------------------------------------------------------------------

bool non_increasing(const BAReport& r) {
  double last = r.initial_cost;
  for (double c : r.accepted_costs) {
    if (c > last) return false;
    last = c;
  }
  return r.final_cost <= r.initial_cost;
}

BAProblem problem_from_scene(const SyntheticScene& scene, const std::vector<std::size_t>& frames) {
  BAProblem p;
  std::map<FeatureId, std::size_t> point_slot;
  std::map<FeatureId, std::size_t> line_slot;
  std::map<FeatureId, int> point_seen;
  std::map<FeatureId, int> line_seen;
  for (auto f : frames) {
    for (const auto& x : scene.frames[f].points) ++point_seen[x.id];
    for (const auto& x : scene.frames[f].lines) ++line_seen[x.left.id];
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::size_t f = frames[i];
    p.poses.push_back(scene.world_from_camera[f].inverse());
    p.pose_fixed.push_back(i == 0);
    for (const auto& x : scene.frames[f].points) {
      const auto it = scene.static_points.find(x.id);
      if (it == scene.static_points.end() || point_seen[x.id] < 2) continue;
      auto [slot, inserted] = point_slot.emplace(x.id, p.points.size());
      if (inserted) p.points.push_back(it->second);
      std::optional<double> ru;
      if (x.disparity) ru = x.u - *x.disparity;
      p.point_observations.push_back({i, slot->second, x.pixel(), ru});
    }
    for (const auto& x : scene.frames[f].lines) {
      const auto it = scene.static_lines.find(x.left.id);
      if (it == scene.static_lines.end() || line_seen[x.left.id] < 2) continue;
      auto [slot, inserted] = line_slot.emplace(x.left.id, p.lines.size());
      if (inserted) p.lines.push_back(it->second);
      p.line_observations.push_back({i, slot->second, x.left, x.right});
    }
  }
  return p;
}

void perturb(BAProblem& p, std::mt19937_64& rng, double pose_sigma, double landmark_sigma) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t i = 0; i < p.poses.size(); ++i) {
    if (p.pose_fixed[i]) continue;
    Vec6 d;
    for (int k = 0; k < 6; ++k) d[k] = pose_sigma * n(rng);
    p.poses[i] = se3_exp(d) * p.poses[i];
  }
  for (auto& x : p.points) x += landmark_sigma * Vec3(n(rng), n(rng), n(rng));
  for (auto& l : p.lines) {
    l.start += landmark_sigma * Vec3(n(rng), n(rng), n(rng));
    l.end += landmark_sigma * Vec3(n(rng), n(rng), n(rng));
  }
}

void criterion_8() {
  std::mt19937_64 rng(8);
  bool monotone = true;
  std::size_t checked = 0;
  double clean_rms = 0.0;
  {
    const SyntheticScene clean = generate_scene(fixtures::static_spec(12, 0.0), 8);
    BAProblem p = problem_from_scene(clean, {0, 2, 4, 6, 8, 10});
    perturb(p, rng, 0.01, 0.05);
    BAOptions opt;
    opt.max_iterations = 100;
    const BAReport r = bundle_adjust(p, clean.cam, opt);
    monotone = monotone && r.ran && non_increasing(r);
    ++checked;
    clean_rms = reprojection_rms(p, clean.cam, opt);
  }
  {
    const SyntheticScene noisy = generate_scene(fixtures::static_spec(12, 1.0), 9);
    BAProblem p = problem_from_scene(noisy, {0, 3, 6, 9, 11});
    perturb(p, rng, 0.01, 0.05);
    const BAReport r = bundle_adjust(p, noisy.cam);
    monotone = monotone && r.ran && non_increasing(r);
    ++checked;
  }
  const auto& runs = dynamic_runs();
  for (const RunResult* res : {&runs.with_dynamic, &runs.without_dynamic}) {
    for (const auto& r : res->local_ba) {
      if (!r.ran) continue;
      monotone = monotone && non_increasing(r);
      ++checked;
    }
    if (res->global_ba && res->global_ba->ran) {
      monotone = monotone && non_increasing(*res->global_ba);
      ++checked;
    }
  }
  report(8, "bundle adjustment monotone and exact on clean data", monotone && clean_rms < kBaRmsTol,
         fmt("%.0f BA runs checked", static_cast<double>(checked)) + std::string(monotone ? ", all monotone" : ", cost increased") +
             fmt(", clean RMS %.2e px", clean_rms));
}

// ---------------------------------------------------------------------------

void criterion_9() {
  auto& r = dynamic_runs();
  bool same = true;
  {
    const MemorySource source(r.scene.cam, r.frames);
    const RunResult again = run_pipeline(source, RunConfig{});
    same = same && fixtures::tum_text(again.trajectory) == fixtures::tum_text(r.with_dynamic.trajectory);
  }
  {
    const SyntheticScene a = generate_scene(fixtures::static_spec(40, 0.5), 11);
    const SyntheticScene b = generate_scene(fixtures::static_spec(40, 0.5), 11);
    same = same && fixtures::serialized_features(a) == fixtures::serialized_features(b);
    const MemorySource sa(a.cam, fixtures::prerender(a, false));
    const MemorySource sb(b.cam, fixtures::prerender(b, false));
    same = same && fixtures::tum_text(run_pipeline(sa, RunConfig{}).trajectory) ==
                       fixtures::tum_text(run_pipeline(sb, RunConfig{}).trajectory);
  }
  {
    const SyntheticScene a = generate_scene(fixtures::dynamic_spec(), fixtures::kDynamicSeed);
    same = same && fixtures::serialized_features(a) == fixtures::serialized_features(r.scene);
  }
  report(9, "byte-identical outputs for identical inputs", same, same ? "trajectories and sequences identical" : "outputs differ");
}

void criterion_10() {
  const auto& r = dynamic_runs();
  const double fps = static_cast<double>(r.with_dynamic.frames.size()) / r.with_dynamic.seconds;
  report(10, "throughput on the 200-frame fixture", fps >= kMinFps,
         fmt("%.1f frames/s", fps) + fmt(" over %.0f frames", static_cast<double>(r.with_dynamic.frames.size())));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {criterion_1, criterion_2, criterion_3, criterion_4,
                                                       criterion_5, criterion_6, criterion_7, criterion_8,
                                                       criterion_9, criterion_10};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), "raised an exception", false, e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}
