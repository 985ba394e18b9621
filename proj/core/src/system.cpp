#include "dynpl/system.hpp"

#include <chrono>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "dynpl/text.hpp"

namespace dynpl {
namespace fs = std::filesystem;

FrameInput SequenceSource::frame(std::size_t i) const {
  FrameInput in;
  in.features = sequence_.frame(i);
  in.left_image = sequence_.left_image(i);
  return in;
}

FrameInput SceneSource::frame(std::size_t i) const {
  FrameInput in;
  in.features = scene_.frames.at(i);
  if (images_) in.left_image = render_frame(scene_, i);
  return in;
}

std::size_t RunResult::tracking_lost() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.status == EstimationStatus::tracking_lost ? 1 : 0;
  return n;
}

EstimationOptions estimation_options(const RunConfig& c) {
  EstimationOptions o;
  o.huber_delta = c.huber_delta;
  o.edge_margin = c.edge_margin;
  o.initial_lambda = c.lm_lambda;
  o.lambda_up = c.lm_lambda_up;
  o.lambda_down = c.lm_lambda_down;
  o.max_iterations = c.lm_max_iters;
  o.step_tolerance = c.lm_step_tol;
  o.cost_tolerance = c.lm_cost_tol;
  o.use_lines = c.enable_lines;
  return o;
}

MapOptions map_options(const RunConfig& c) {
  MapOptions o;
  o.covisibility_min = c.covis_min;
  o.association_gate_px = c.association_gate_px;
  o.min_disparity = c.min_disparity;
  o.use_lines = c.enable_lines;
  o.ba.huber_delta = c.huber_delta;
  o.ba.edge_margin = c.edge_margin;
  o.ba.initial_lambda = c.lm_lambda;
  o.ba.lambda_up = c.lm_lambda_up;
  o.ba.lambda_down = c.lm_lambda_down;
  o.local_ba_iterations = c.ba_max_iters;
  o.global_ba_iterations = c.global_ba_max_iters;
  return o;
}

LoopOptions loop_options(const RunConfig& c) {
  LoopOptions o;
  o.lc_alpha = c.lc_alpha;
  o.inlier_min = c.inlier_min;
  o.lc_rat_min = c.lc_rat_min;
  o.exclusion_window = static_cast<std::size_t>(c.exclusion_window);
  o.neighbor_factor = c.neighbor_factor;
  o.sim_factor = c.sim_factor;
  o.max_drift_fraction = c.max_drift_fraction;
  o.loop_inlier_px = c.loop_inlier_px;
  o.pgo_covisibility_ratio = c.pgo_covis_ratio;
  o.strict_paper = c.strict_paper_lcd;
  o.estimation = estimation_options(c);
  o.estimation.use_lines = false;
  o.point_filter = {c.alpha_point, c.point_filter_epsilon};
  return o;
}

namespace {

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct PoseLink {
  KeyFrameId ref = 0;
  PoseSE3 camera_from_ref;  // this frame's camera from the reference keyframe's camera
};

}  // namespace

struct Tracker::State {
  StereoCamera cam;
  RunConfig cfg;
  EstimationOptions est;
  LoopOptions loop;
  LoopDetector detector;
  std::unique_ptr<LocalMap> map;

  bool has_prev = false;
  StereoFrame prev;
  PoseSE3 prev_wc;
  std::optional<PoseSE3> velocity;  // previous camera from the one before

  // ids flagged dynamic since the last keyframe, withheld from mapping
  std::unordered_set<FeatureId> recent_dynamic_points;
  std::unordered_set<FeatureId> recent_dynamic_lines;

  std::optional<GGSDescriptor> last_kf_ggs;
  std::size_t last_kf_position = 0;
  std::vector<double> kf_scalar;                    // scalar when each keyframe was declared
  std::vector<std::optional<double>> kf_next_scalar;  // scalar of the frame right after it

  std::size_t position = 0;
  std::vector<PoseLink> links;
  RunResult result;
  std::ostringstream dynamics_csv;
  Clock::time_point started = Clock::now();

  State(const StereoCamera& c, RunConfig config)
      : cam(c),
        cfg(std::move(config)),
        est(estimation_options(cfg)),
        loop(loop_options(cfg)),
        detector(loop),
        map(std::make_unique<LocalMap>(cam, map_options(cfg))) {
    write_dynamics_csv_header(dynamics_csv);
  }

  void time(const char* stage, std::size_t frame, Clock::time_point t0) {
    result.timings.push_back({stage, frame, millis_since(t0)});
  }

  double keyframe_threshold_now() const {
    const std::size_t n = kf_scalar.size();
    if (n == 0 || !kf_next_scalar[n - 1]) return std::numeric_limits<double>::infinity();
    if (n >= 2 && kf_next_scalar[n - 2]) {
      return keyframe_threshold(kf_scalar[n - 1], *kf_next_scalar[n - 1], *kf_next_scalar[n - 2], cfg.kf_coeff);
    }
    return cfg.kf_bootstrap_factor * *kf_next_scalar[n - 1];
  }

  PoseSE3 track(const StereoFrame& cur, FrameRecord& rec) {
    const auto t0 = Clock::now();
    const auto matches = match_points_by_id(prev.points, cur.points, cam.width, cam.height);
    const auto filtered = filter_point_matches(matches, {cfg.alpha_point, cfg.point_filter_epsilon});
    rec.point_outliers = filtered.outliers.size();

    FilterResult<LineMatch> line_filtered;
    if (cfg.enable_lines) {
      const auto prev_lines = prev.left_lines();
      const auto cur_lines = cur.left_lines();
      const auto line_matches = match_lines_by_id(prev_lines, cur_lines);
      const auto llgs_prev = build_llgs(prev_lines);
      line_filtered = filter_line_matches(line_matches, llgs_prev, {cfg.line_mean_factor});
      rec.line_outliers = line_filtered.outliers.size();
    }

    std::unordered_map<FeatureId, const StereoLineFeature*> prev_line_by_id;
    for (const auto& l : prev.lines) prev_line_by_id[l.left.id] = &l;

    if (cfg.enable_dynamic && velocity) {
      const MotionModel model{*velocity};
      const DynamicGridMap grids = detect_dynamic_grids(filtered.inliers, model, cam, cfg.tau_pt);
      for (const auto& p : cur.points) {
        if (grids.is_dynamic(p.pixel(), cam.width, cam.height)) rec.dynamic_points.insert(p.id);
      }
      DynamicLLGSet llgs;
      if (cfg.enable_lines) {
        std::vector<DynamicLineInput> inputs;
        for (const auto& m : line_filtered.inliers) {
          const StereoLineFeature* p = prev_line_by_id.at(m.prev.id);
          if (!p->right) continue;
          if (auto l = triangulate_line(p->left, *p->right, cam, cfg.min_disparity)) inputs.push_back({m, *l});
        }
        llgs = detect_dynamic_llgs(inputs, build_llgs(cur.left_lines()), model, cam, cfg.rho, cfg.llg_aggregation);
        rec.dynamic_lines = llgs.dynamic_lines;
      }
      write_dynamics_csv(dynamics_csv, cur.index, grids, llgs);
      rec.dynamics_ran = true;
      recent_dynamic_points.insert(rec.dynamic_points.begin(), rec.dynamic_points.end());
      recent_dynamic_lines.insert(rec.dynamic_lines.begin(), rec.dynamic_lines.end());
    }

    std::vector<PointCorrespondence> points;
    for (const auto& m : filtered.inliers) {
      if (rec.dynamic_points.count(m.curr.id)) continue;
      if (auto p = triangulate_point(m.prev, cam, cfg.min_disparity)) points.push_back({m.curr.id, *p, m.curr.pixel()});
    }
    std::vector<LineCorrespondence> lines;
    for (const auto& m : line_filtered.inliers) {
      if (rec.dynamic_lines.count(m.curr.id)) continue;
      const StereoLineFeature* p = prev_line_by_id.at(m.prev.id);
      if (!p->right) continue;
      if (auto l = triangulate_line(p->left, *p->right, cam, cfg.min_disparity)) lines.push_back({m.curr.id, *l, m.curr});
    }

    const PoseSE3 initial = velocity.value_or(PoseSE3::identity());
    const PoseEstimate e = estimate_pose(points, lines, initial, cam, est);
    rec.status = e.status;
    const PoseSE3 camera_from_prev = e.ok() ? e.camera_from_ref : initial;
    velocity = camera_from_prev;
    time("tracking", cur.index, t0);
    return prev_wc * camera_from_prev.inverse();
  }

  void keyframe(const StereoFrame& cur, PoseSE3& world_from_camera, std::optional<GGSDescriptor> ggs,
                std::optional<double> scalar, FrameRecord& rec) {
    auto t0 = Clock::now();
    std::unordered_set<FeatureId> excluded_points = recent_dynamic_points;
    std::unordered_set<FeatureId> excluded_lines = recent_dynamic_lines;
    const KeyFrameInsertion ins =
        map->insert_keyframe(cur, world_from_camera.inverse(), ggs, excluded_points, excluded_lines);
    if (ins.id > 0) {
      result.local_ba.push_back(map->local_bundle_adjust(ins.id));
      map->cull();
    }
    time("mapping", cur.index, t0);
    recent_dynamic_points.clear();
    recent_dynamic_lines.clear();

    if (cfg.enable_loop && ggs && scalar && ins.id > 0) {
      t0 = Clock::now();
      detector.record_consecutive(*scalar);
      auto candidates = detector.detect(*map, ins.id);
      if (!candidates.empty() && candidates.back().accepted) {
        const LoopCorrection corr = correct_loop(*map, candidates.back(), loop);
        if (corr.applied) {
          ++result.loops_closed;
        } else {
          candidates.back().accepted = false;
          candidates.back().reason = "pgo: " + corr.diagnostic;
        }
      }
      for (auto& c : candidates) result.loop_candidates.push_back(std::move(c));
      time("loop", cur.index, t0);
    }

    world_from_camera = map->keyframe(ins.id).world_from_camera();
    rec.keyframe = true;
    kf_scalar.push_back(scalar.value_or(0.0));
    kf_next_scalar.push_back(std::nullopt);
    last_kf_ggs = std::move(ggs);
    last_kf_position = position;
    links.push_back({ins.id, PoseSE3::identity()});
  }

  void process(const FrameInput& input) {
    const StereoFrame& cur = input.features;
    if (has_prev && cur.index <= prev.index) {
      throw std::runtime_error("frame index " + std::to_string(cur.index) + " does not increase");
    }
    FrameRecord rec;
    rec.index = cur.index;
    rec.timestamp = cur.timestamp;

    PoseSE3 world_from_camera = has_prev ? track(cur, rec) : PoseSE3::identity();

    std::optional<GGSDescriptor> ggs;
    std::optional<double> scalar;
    if (input.left_image) {
      const auto t0 = Clock::now();
      ggs = compute_ggs(*input.left_image, cfg.ggs_scale);
      if (last_kf_ggs) scalar = ggs_dissimilarity(*ggs, *last_kf_ggs);
      time("ggs", cur.index, t0);
    }
    rec.ggs_scalar = scalar;

    bool is_kf = !has_prev;
    if (has_prev) {
      const std::size_t since = position - last_kf_position;
      if (since == 1 && scalar) kf_next_scalar.back() = scalar;
      if (since >= static_cast<std::size_t>(cfg.kf_max_interval)) {
        is_kf = true;
      } else if (scalar && since >= static_cast<std::size_t>(cfg.kf_min_interval)) {
        is_kf = is_new_keyframe(*scalar, keyframe_threshold_now());
      }
    }

    if (is_kf) {
      keyframe(cur, world_from_camera, std::move(ggs), scalar, rec);
    } else {
      const KeyFrame& kf = map->keyframes().back();
      links.push_back({kf.id, world_from_camera.inverse() * kf.world_from_camera()});
    }

    prev = cur;
    prev_wc = world_from_camera;
    has_prev = true;
    ++position;
    result.frames.push_back(std::move(rec));
  }

  RunResult finish() {
    if (map->keyframes().size() >= 2) {
      const auto t0 = Clock::now();
      result.global_ba = map->global_bundle_adjust();
      time("global_ba", result.frames.empty() ? 0 : result.frames.back().index, t0);
    }
    for (std::size_t i = 0; i < links.size(); ++i) {
      const PoseSE3 cw = links[i].camera_from_ref * map->keyframe(links[i].ref).camera_from_world;
      result.trajectory.push_back({result.frames[i].timestamp, cw.inverse()});
    }
    result.dynamics_csv = dynamics_csv.str();
    result.map = std::move(map);
    result.seconds = std::chrono::duration<double>(Clock::now() - started).count();
    return std::move(result);
  }
};

Tracker::Tracker(const StereoCamera& cam, RunConfig config)
    : state_(std::make_unique<State>(cam, std::move(config))) {}

Tracker::~Tracker() = default;

void Tracker::process(const FrameInput& input) { state_->process(input); }

RunResult Tracker::finish() { return state_->finish(); }

RunResult run_pipeline(const FrameSource& source, const RunConfig& config) {
  Tracker tracker(source.camera(), config);
  for (std::size_t i = 0; i < source.size(); ++i) tracker.process(source.frame(i));
  return tracker.finish();
}

void write_run_outputs(const fs::path& dir, const RunResult& result, const RunConfig& config) {
  fs::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };
  write_tum_file(dir / "trajectory.txt", result.trajectory);
  {
    auto out = open("keyframes.txt");
    out << "# keyframe frame timestamp\n";
    for (const auto& kf : result.map->keyframes()) {
      out << kf.id << ' ' << kf.frame_index << ' ' << format_double(kf.timestamp) << '\n';
    }
  }
  {
    auto out = open("loops.csv");
    write_loop_csv_header(out);
    for (const auto& c : result.loop_candidates) write_loop_csv(out, c);
  }
  {
    auto out = open("dynamics.csv");
    out << result.dynamics_csv;
  }
  {
    auto out = open("timing.csv");
    out << "stage,frame,millis\n";
    for (const auto& t : result.timings) out << t.stage << ',' << t.frame << ',' << format_double(t.millis) << '\n';
  }
  {
    auto out = open("map.txt");
    result.map->write_dump(out);
  }
  {
    auto out = open("config.txt");
    write_config_echo(out, config);
  }
}

}  // namespace dynpl
