#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "dynpl/association.hpp"
#include "dynpl/ggs.hpp"
#include "dynpl/pose_estimation.hpp"
#include "dynpl/synthetic.hpp"
#include "dynpl/system.hpp"

using namespace dynpl;

namespace {

const SyntheticScene& scene() {
  static const SyntheticScene s = [] {
    SceneSpec spec;
    spec.frames = 40;
    spec.dynamic_bodies = 2;
    spec.noise_sigma = 0.5;
    return generate_scene(spec, 1);
  }();
  return s;
}

const GrayImage& image(std::size_t k) {
  static const std::vector<GrayImage> images = [] {
    std::vector<GrayImage> v;
    for (std::size_t i = 0; i < 2; ++i) v.push_back(render_frame(scene(), i * 10));
    return v;
  }();
  return images.at(k);
}

void BM_ComputeGgs(benchmark::State& state) {
  const GrayImage& img = image(0);
  for (auto _ : state) benchmark::DoNotOptimize(compute_ggs(img));
}
BENCHMARK(BM_ComputeGgs)->Unit(benchmark::kMillisecond);

void BM_GgsDissimilarity(benchmark::State& state) {
  const GGSDescriptor a = compute_ggs(image(0));
  const GGSDescriptor b = compute_ggs(image(1));
  for (auto _ : state) benchmark::DoNotOptimize(ggs_dissimilarity(a, b));
}
BENCHMARK(BM_GgsDissimilarity)->Unit(benchmark::kMicrosecond);

void BM_PointFilter(benchmark::State& state) {
  const auto& s = scene();
  const auto matches = match_points_by_id(s.frames[4].points, s.frames[5].points, s.cam.width, s.cam.height);
  for (auto _ : state) benchmark::DoNotOptimize(filter_point_matches(matches));
}
BENCHMARK(BM_PointFilter)->Unit(benchmark::kMicrosecond);

void BM_EstimatePose(benchmark::State& state) {
  const auto& s = scene();
  const StereoFrame& prev = s.frames[4];
  const StereoFrame& curr = s.frames[5];
  std::vector<PointCorrespondence> points;
  for (const auto& m : match_points_by_id(prev.points, curr.points, s.cam.width, s.cam.height)) {
    if (auto p = triangulate_point(m.prev, s.cam)) points.push_back({m.curr.id, *p, m.curr.pixel()});
  }
  std::vector<LineCorrespondence> lines;
  for (const auto& c : curr.lines) {
    for (const auto& p : prev.lines) {
      if (p.left.id != c.left.id || !p.right) continue;
      if (auto l = triangulate_line(p.left, *p.right, s.cam)) lines.push_back({c.left.id, *l, c.left});
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(estimate_pose(points, lines, PoseSE3::identity(), s.cam));
}
BENCHMARK(BM_EstimatePose)->Unit(benchmark::kMicrosecond);

void BM_PipelineFeaturesOnly(benchmark::State& state) {
  const auto& s = scene();
  for (auto _ : state) {
    const SceneSource source(s, false);
    benchmark::DoNotOptimize(run_pipeline(source, RunConfig{}));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.frames.size()));
}
BENCHMARK(BM_PipelineFeaturesOnly)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
