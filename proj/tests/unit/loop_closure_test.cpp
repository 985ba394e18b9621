#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "dynpl/loop_closure.hpp"

using namespace dynpl;

namespace {

StereoCamera cam() { return {718.856, 718.856, 607.1928, 185.2157, 0.537, 1242, 376}; }

constexpr int kRingKeyFrames = 36;
constexpr KeyFrameId kRevisited = 4;

// Small image whose gray values are uniform noise over [base, base + 60].
GGSDescriptor place_descriptor(int base, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 60);
  GrayImage img(64, 48);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(std::clamp(base + u(rng), 0, 255));
  return compute_ggs(img, 1.0);
}

// Camera on a circle of radius 5 m looking outward at angle a.
PoseSE3 ring_pose(double a) {
  Mat3 R;
  R.col(0) = Vec3(std::sin(a), 0, -std::cos(a));
  R.col(1) = Vec3(0, 1, 0);
  R.col(2) = Vec3(std::cos(a), 0, std::sin(a));
  return PoseSE3(R, 5.0 * Vec3(std::cos(a), 0, std::sin(a))).inverse();
}

StereoFrame observe(const std::vector<Vec3>& world, const PoseSE3& camera_from_world, std::size_t index,
                    double noise, std::mt19937_64& rng) {
  const StereoCamera c = cam();
  std::normal_distribution<double> n(0.0, noise);
  StereoFrame f;
  f.index = index;
  f.timestamp = 0.1 * index;
  for (std::size_t i = 0; i < world.size(); ++i) {
    const Vec3 Xc = camera_from_world * world[i];
    if (Xc.z() < 1.0) continue;
    const Vec2 px = c.project(Xc);
    if (!c.in_image(px, 5.0)) continue;
    const double du = noise > 0 ? n(rng) : 0.0;
    const double dv = noise > 0 ? n(rng) : 0.0;
    f.points.push_back({static_cast<FeatureId>(i + 1), px.x() + du, px.y() + dv, px.x() - c.project_right_u(Xc)});
  }
  return f;
}

struct RingScene {
  LocalMap map{cam()};
  PoseSE3 truth_current;
  std::vector<double> consecutive_sims;
};

// Keyframes 0..35 at exact poses around the ring, then keyframe 36 back at the
// place of keyframe 4 with a drifted map pose. Descriptors follow the place.
RingScene make_ring(bool decoy_neighbours) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(0, 2 * M_PI), h(-2, 2);
  std::vector<Vec3> world;
  for (int i = 0; i < 3000; ++i) {
    const double a = ang(rng);
    world.emplace_back(15 * std::cos(a), h(rng), 15 * std::sin(a));
  }
  RingScene s;
  for (int k = 0; k < kRingKeyFrames; ++k) {
    const PoseSE3 T = ring_pose(2 * M_PI * k / kRingKeyFrames);
    const bool decoy = decoy_neighbours && (k == static_cast<int>(kRevisited) - 1 || k == static_cast<int>(kRevisited) + 1);
    s.map.insert_keyframe(observe(world, T, k, 0.0, rng), T, place_descriptor(decoy ? 190 : 3 * k, 100 + k));
  }
  for (int k = 0; k + 1 < kRingKeyFrames; ++k) {
    s.consecutive_sims.push_back(ggs_dissimilarity(*s.map.keyframe(k).ggs, *s.map.keyframe(k + 1).ggs));
  }
  s.truth_current = ring_pose(2 * M_PI * kRevisited / kRingKeyFrames);
  const PoseSE3 drift = se3_exp((Vec6() << 0.25, 0.0, 0.1, 0.0, 0.005, 0.0).finished());
  s.map.insert_keyframe(observe(world, s.truth_current, kRingKeyFrames, 0.3, rng), drift * s.truth_current,
                        place_descriptor(3 * static_cast<int>(kRevisited), 999));
  return s;
}

double threshold_of(const std::vector<double>& sims) {
  LoopDetector d;
  for (double v : sims) d.record_consecutive(v);
  return d.sim_threshold();
}

}  // namespace

TEST_SUITE("loop_closure") {
  TEST_CASE("candidates respect the exclusion window and threshold and come sorted") {
    std::vector<GGSDescriptor> d;
    for (int k = 0; k < 40; ++k) d.push_back(place_descriptor(std::abs(k - 5) * 4, 7 + k));
    const GGSDescriptor current = place_descriptor(20, 1);  // closest to k = 0 and k = 10
    std::vector<const GGSDescriptor*> history;
    for (const auto& x : d) history.push_back(&x);
    history[3] = nullptr;

    const auto all = find_loop_candidates(current, history, std::numeric_limits<double>::infinity(), 30);
    REQUIRE(all.size() == 9);  // j + 30 < 40, minus the null entry
    for (const auto& r : all) {
      CHECK(r.id + 30 < history.size());
      CHECK(r.id != 3);
      CHECK(r.sim_v == doctest::Approx(ggs_dissimilarity(current, d[r.id])));
    }
    CHECK(std::is_sorted(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.sim_v < b.sim_v; }));

    const double cut = all[4].sim_v;
    const auto some = find_loop_candidates(current, history, cut, 30);
    CHECK(some.size() == 4);
    for (const auto& r : some) CHECK(r.sim_v < cut);

    CHECK(find_loop_candidates(current, std::vector<const GGSDescriptor*>(history.begin(), history.begin() + 30),
                               std::numeric_limits<double>::infinity(), 30)
              .empty());
  }

  TEST_CASE("equal similarities keep id order") {
    const GGSDescriptor a = place_descriptor(50, 3);
    std::vector<const GGSDescriptor*> history(12, &a);
    const auto r = find_loop_candidates(a, history, 1.0, 2);
    REQUIRE(r.size() == 10);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i].id == i);
  }

  TEST_CASE("detector threshold is sim_factor times the median") {
    LoopDetector d;
    CHECK(std::isinf(d.sim_threshold()));
    for (double v : {0.5, 0.1, 0.3}) d.record_consecutive(v);
    CHECK(d.sim_threshold() == doctest::Approx(0.6));
    d.record_consecutive(0.2);
    CHECK(d.sim_threshold() == doctest::Approx(0.5));
    LoopOptions o;
    o.sim_factor = 3.0;
    LoopDetector e(o);
    e.record_consecutive(0.4);
    CHECK(e.sim_threshold() == doctest::Approx(1.2));
  }

  TEST_CASE("a true revisit passes both stages") {
    const RingScene s = make_ring(false);
    const double thr = threshold_of(s.consecutive_sims);
    const KeyFrameId cur = kRingKeyFrames;
    const double sim_v = ggs_dissimilarity(*s.map.keyframe(cur).ggs, *s.map.keyframe(kRevisited).ggs);
    const LoopCandidate c = verify_candidate(s.map, cur, kRevisited, sim_v, thr);
    CHECK(c.accepted);
    CHECK(c.reason.empty());
    CHECK(c.ratio_inl > 0.9);
    // Measured relative is the identity (same place); the map relative carries the drift.
    CHECK(se3_log(c.measured).norm() < 0.02);
    CHECK(se3_log(c.relative).norm() > 0.2);
    CHECK(c.lc_rat == doctest::Approx(0.001 * se3_log(c.relative).norm() * c.ratio_inl));
  }

  TEST_CASE("the detector finds the revisited keyframe") {
    const RingScene s = make_ring(false);
    LoopDetector d;
    for (double v : s.consecutive_sims) d.record_consecutive(v);
    const auto out = d.detect(s.map, kRingKeyFrames);
    REQUIRE_FALSE(out.empty());
    CHECK(out.size() <= d.options().max_candidates);
    CHECK(out.back().accepted);
    CHECK(out.back().looped == kRevisited);
    for (std::size_t i = 0; i + 1 < out.size(); ++i) CHECK_FALSE(out[i].accepted);
  }

  TEST_CASE("dissimilar temporal neighbours reject a geometrically valid loop") {
    const RingScene s = make_ring(true);
    const double thr = threshold_of(s.consecutive_sims);
    const KeyFrameId cur = kRingKeyFrames;
    const double sim_v = ggs_dissimilarity(*s.map.keyframe(cur).ggs, *s.map.keyframe(kRevisited).ggs);
    const LoopCandidate c = verify_candidate(s.map, cur, kRevisited, sim_v, thr);
    CHECK(c.ratio_inl > 0.9);
    CHECK_FALSE(c.accepted);
    CHECK(c.reason == "neighbour similarity inconsistent");
  }

  TEST_CASE("a keyframe seeing other landmarks is rejected for too few matches") {
    const RingScene s = make_ring(false);
    const LoopCandidate c = verify_candidate(s.map, kRingKeyFrames, 20, 0.0, 1.0);
    CHECK_FALSE(c.accepted);
    CHECK(c.reason == "too few matches");
  }

  TEST_CASE("strict mode applies the literal lc_rat gate") {
    const RingScene s = make_ring(false);
    LoopOptions o;
    o.strict_paper = true;
    const LoopCandidate c = verify_candidate(s.map, kRingKeyFrames, kRevisited, 0.0, threshold_of(s.consecutive_sims), o);
    CHECK_FALSE(c.accepted);
    CHECK(c.reason == "lc_rat below minimum");
    o.lc_rat_min = 0.0;
    CHECK(verify_candidate(s.map, kRingKeyFrames, kRevisited, 0.0, threshold_of(s.consecutive_sims), o).accepted);
  }

  TEST_CASE("a drift larger than the path bound is rejected") {
    const RingScene s = make_ring(false);
    LoopOptions o;
    o.max_drift_fraction = 1e-3;
    const LoopCandidate c = verify_candidate(s.map, kRingKeyFrames, kRevisited, 0.0, threshold_of(s.consecutive_sims), o);
    CHECK(c.reason == "relative transform exceeds drift bound");
  }

  TEST_CASE("loop pose graph edges") {
    const RingScene s = make_ring(false);
    const LoopCandidate c = verify_candidate(s.map, kRingKeyFrames, kRevisited, 0.0, threshold_of(s.consecutive_sims));
    const LoopOptions o;
    const PoseGraph g = build_loop_pose_graph(s.map, c, o);
    const auto& kfs = s.map.keyframes();
    REQUIRE(g.poses.size() == kfs.size());
    CHECK(g.fixed[0]);
    CHECK(std::count(g.fixed.begin(), g.fixed.end(), true) == 1);
    std::size_t odometry = 0, loops = 0;
    for (const auto& e : g.edges) {
      switch (e.kind) {
        case PoseGraphEdgeKind::odometry:
          CHECK(e.to == e.from + 1);
          CHECK(pose_graph_residual(e, g.poses[e.from], g.poses[e.to]).norm() < 1e-9);
          ++odometry;
          break;
        case PoseGraphEdgeKind::covisibility: {
          CHECK(e.to >= e.from + 2);
          const double na = kfs[e.from].point_ids.size() + kfs[e.from].line_ids.size();
          const double nb = kfs[e.to].point_ids.size() + kfs[e.to].line_ids.size();
          CHECK(s.map.count_shared(e.from, e.to) >= o.pgo_covisibility_ratio * std::min(na, nb));
          break;
        }
        case PoseGraphEdgeKind::loop:
          CHECK(e.from == kRevisited);
          CHECK(e.to == kRingKeyFrames);
          CHECK((e.measurement.matrix() - c.measured.inverse().matrix()).norm() < 1e-12);
          ++loops;
          break;
      }
    }
    CHECK(odometry == kfs.size() - 1);
    CHECK(loops == 1);
  }

  TEST_CASE("correcting the loop pulls the drifted keyframe back") {
    RingScene s = make_ring(false);
    const LoopCandidate c = verify_candidate(s.map, kRingKeyFrames, kRevisited, 0.0, threshold_of(s.consecutive_sims));
    REQUIRE(c.accepted);
    const auto err = [&] {
      return (s.map.keyframe(kRingKeyFrames).world_from_camera().translation() - s.truth_current.inverse().translation()).norm();
    };
    const double before = err();
    const PoseSE3 first = s.map.keyframe(0).camera_from_world;
    const LoopCorrection r = correct_loop(s.map, c);
    CHECK(r.applied);
    CHECK_FALSE(r.report.diverged);
    CHECK(r.report.final_cost < r.report.initial_cost);
    CHECK(err() < 0.5 * before);
    CHECK(s.map.keyframe(0).camera_from_world.matrix() == first.matrix());
  }

  TEST_CASE("csv rows") {
    std::ostringstream out;
    write_loop_csv_header(out);
    LoopCandidate c;
    c.current = 40;
    c.looped = 3;
    c.sim_v = 0.25;
    c.ratio_inl = 0.5;
    c.lc_rat = 0.125;
    c.accepted = true;
    write_loop_csv(out, c);
    CHECK(out.str() == "current_kf,looped_kf,sim_v,ratio_inl,lc_rat,accepted\n40,3,0.25,0.5,0.125,1\n");
  }
}
