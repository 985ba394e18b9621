#include <doctest.h>

#include <filesystem>

#include "dynpl/system.hpp"
#include "tempdir.hpp"

using namespace dynpl;
using dynpl::testing::TempDir;
using dynpl::testing::read_text;

namespace {

SceneSpec spec(int bodies) {
  SceneSpec s;
  s.frames = 40;
  s.points_per_frame = 200;
  s.lines_per_frame = 40;
  s.dynamic_bodies = bodies;
  return s;
}

}  // namespace

TEST_SUITE("system") {
  TEST_CASE("noise-free static scene is tracked almost exactly") {
    const SyntheticScene sc = generate_scene(spec(0), 1);
    const RunResult r = run_pipeline(SceneSource(sc, false), RunConfig{});
    REQUIRE(r.trajectory.size() == sc.frames.size());
    const TrajectoryMetrics m = evaluate_trajectory(r.trajectory, sc.ground_truth());
    CHECK(m.ate_rmse < 1e-3);
    CHECK(r.tracking_lost() == 0);
    CHECK(r.frames.front().keyframe);
  }

  TEST_CASE("runs are deterministic") {
    const SyntheticScene sc = generate_scene(spec(1), 2);
    RunConfig c;
    const RunResult a = run_pipeline(SceneSource(sc, true), c);
    const RunResult b = run_pipeline(SceneSource(sc, true), c);
    REQUIRE(a.trajectory.size() == b.trajectory.size());
    for (std::size_t k = 0; k < a.trajectory.size(); ++k) {
      CHECK(a.trajectory[k].world_from_camera.matrix() == b.trajectory[k].world_from_camera.matrix());
      CHECK(a.frames[k].keyframe == b.frames[k].keyframe);
      CHECK(a.frames[k].dynamic_points == b.frames[k].dynamic_points);
    }
    CHECK(a.dynamics_csv == b.dynamics_csv);
  }

  TEST_CASE("disabling the dynamics stage flags nothing") {
    const SyntheticScene sc = generate_scene(spec(1), 3);
    RunConfig c;
    c.enable_dynamic = false;
    const RunResult r = run_pipeline(SceneSource(sc, false), c);
    for (const auto& f : r.frames) {
      CHECK_FALSE(f.dynamics_ran);
      CHECK(f.dynamic_points.empty());
      CHECK(f.dynamic_lines.empty());
    }
  }

  TEST_CASE("every output file is written") {
    const SyntheticScene sc = generate_scene(spec(1), 4);
    const RunConfig c;
    const RunResult r = run_pipeline(SceneSource(sc, true), c);
    TempDir dir;
    write_run_outputs(dir.path(), r, c);
    for (const char* name :
         {"trajectory.txt", "keyframes.txt", "loops.csv", "dynamics.csv", "timing.csv", "map.txt", "config.txt"}) {
      CAPTURE(name);
      CHECK(std::filesystem::exists(dir / name));
    }
    const Trajectory t = read_tum_file(dir / "trajectory.txt");
    CHECK(t.size() == sc.frames.size());
    CHECK(read_text(dir / "loops.csv").rfind("current_kf,looped_kf,", 0) == 0);
    CHECK(read_text(dir / "config.txt").find("tau_pt = ") != std::string::npos);
  }

  TEST_CASE("option mapping follows the run config") {
    RunConfig c;
    c.exclusion_window = 11;
    c.strict_paper_lcd = true;
    c.huber_delta = 3.0;
    c.covis_min = 25;
    CHECK(loop_options(c).exclusion_window == 11);
    CHECK(loop_options(c).strict_paper);
    CHECK(estimation_options(c).huber_delta == 3.0);
    CHECK(map_options(c).covisibility_min == 25);
  }
}
