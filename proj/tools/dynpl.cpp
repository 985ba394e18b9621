#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynpl/config.hpp"
#include "dynpl/ggs.hpp"
#include "dynpl/sequence.hpp"
#include "dynpl/synthetic.hpp"
#include "dynpl/system.hpp"
#include "dynpl/text.hpp"
#include "dynpl/trajectory.hpp"

namespace fs = std::filesystem;
using namespace dynpl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct RunArgs {
  std::string sequence;
  std::string out = "dynpl_out";
  std::string config;
  std::vector<std::string> overrides;
  bool no_dynamic = false;
  bool no_loop = false;
  bool no_lines = false;
  bool strict = false;
  std::optional<std::uint64_t> seed;
};

int cmd_run(const RunArgs& a) {
  RunConfig cfg;
  if (!a.config.empty()) apply_config_file(cfg, a.config);
  for (const auto& o : a.overrides) apply_override(cfg, o);
  if (a.no_dynamic) cfg.enable_dynamic = false;
  if (a.no_loop) cfg.enable_loop = false;
  if (a.no_lines) cfg.enable_lines = false;
  if (a.strict) cfg.strict_paper_lcd = true;
  if (a.seed) cfg.seed = *a.seed;

  write_config_echo(std::cout, cfg);
  const SequenceSource source(Sequence::open(a.sequence));
  const RunResult result = run_pipeline(source, cfg);
  write_run_outputs(a.out, result, cfg);

  std::cout << "frames " << result.frames.size() << " keyframes " << result.map->keyframes().size() << " loops "
            << result.loops_closed << " lost " << result.tracking_lost() << " seconds "
            << format_double(result.seconds) << '\n';
  if (const auto gt = source.sequence().groundtruth_path()) {
    const TrajectoryMetrics m = evaluate_trajectory(result.trajectory, read_tum_file(*gt));
    std::cout << "ate_rmse " << format_double(m.ate_rmse) << " rotation_rmse_deg "
              << format_double(m.rotation_rmse_deg) << '\n';
  }
  return kExitOk;
}

int cmd_simulate(const std::string& spec_path, std::uint64_t seed, const std::string& out, bool images) {
  const SceneSpec spec = read_scene_spec(spec_path);
  const SyntheticScene scene = generate_scene(spec, seed);
  write_sequence(scene, out, images);
  std::cout << "frames " << scene.frames.size() << " static_points " << scene.static_points.size()
            << " static_lines " << scene.static_lines.size() << " bodies " << scene.bodies.size() << '\n';
  return kExitOk;
}

int cmd_evaluate(const std::string& est, const std::string& gt) {
  const TrajectoryMetrics m = evaluate_trajectory(read_tum_file(est), read_tum_file(gt));
  std::cout << "t_rmse " << format_double(m.ate_rmse) << '\n';
  std::cout << "r_rmse_deg " << format_double(m.rotation_rmse_deg) << '\n';
  return kExitOk;
}

int cmd_ggs(const std::vector<std::string>& images, const std::string& dir, double scale) {
  if (!dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".pgm" || ext == ".png")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<GGSDescriptor> d;
    for (const auto& f : files) d.push_back(compute_ggs(read_image(f), scale));
    std::cout << "image";
    for (const auto& f : files) std::cout << ',' << f.filename().string();
    std::cout << '\n';
    for (std::size_t i = 0; i < files.size(); ++i) {
      std::cout << files[i].filename().string();
      for (std::size_t j = 0; j < files.size(); ++j) std::cout << ',' << format_double(ggs_dissimilarity(d[i], d[j]));
      std::cout << '\n';
    }
    return kExitOk;
  }
  if (images.size() != 2) throw std::invalid_argument("ggs needs two images or --dir");
  const GGSDescriptor a = compute_ggs(read_image(images[0]), scale);
  const GGSDescriptor b = compute_ggs(read_image(images[1]), scale);
  std::cout << format_double(ggs_dissimilarity(a, b)) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo point-line SLAM with dynamic feature rejection"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Track a sequence and write trajectory and diagnostics");
  run_cmd->add_option("sequence", run.sequence, "Sequence directory")->required()->check(CLI::ExistingDirectory);
  run_cmd->add_option("-o,--out", run.out, "Output directory");
  run_cmd->add_option("--config", run.config, "key=value configuration file")->check(CLI::ExistingFile);
  run_cmd->add_option("--set", run.overrides, "Override one key (key=value), repeatable");
  run_cmd->add_flag("--no-dynamic", run.no_dynamic, "Disable dynamic grid and LLG rejection");
  run_cmd->add_flag("--no-loop", run.no_loop, "Disable loop closing");
  run_cmd->add_flag("--no-lines", run.no_lines, "Use point features only");
  run_cmd->add_flag("--strict-paper-lcd", run.strict, "Accept loops by the literal lc_rat rule");
  run_cmd->add_option("--seed", run.seed, "Seed recorded with the run");

  std::string spec_path;
  std::string sim_out = "dynpl_sequence";
  std::uint64_t sim_seed = 0;
  bool no_images = false;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic sequence with ground truth");
  sim_cmd->add_option("spec", spec_path, "Scene description (key=value)")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("-o,--out", sim_out, "Output directory");
  sim_cmd->add_option("--seed", sim_seed, "Generator seed");
  sim_cmd->add_flag("--no-images", no_images, "Skip rendering image_0/");

  std::string est_path;
  std::string gt_path;
  auto* eval_cmd = app.add_subcommand("evaluate", "ATE and rotation RMSE of a TUM trajectory");
  eval_cmd->add_option("estimated", est_path)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("groundtruth", gt_path)->required()->check(CLI::ExistingFile);

  std::vector<std::string> ggs_images;
  std::string ggs_dir;
  double ggs_scale = kDefaultGgsScale;
  auto* ggs_cmd = app.add_subcommand("ggs", "Gray-similarity score of two images, or a CSV matrix for a directory");
  ggs_cmd->add_option("images", ggs_images, "Two image files")->check(CLI::ExistingFile);
  ggs_cmd->add_option("--dir", ggs_dir, "Directory of .pgm/.png images")->check(CLI::ExistingDirectory);
  ggs_cmd->add_option("--scale", ggs_scale, "Second-level scale factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run);
    if (sim_cmd->parsed()) return cmd_simulate(spec_path, sim_seed, sim_out, !no_images);
    if (eval_cmd->parsed()) return cmd_evaluate(est_path, gt_path);
    if (ggs_cmd->parsed()) return cmd_ggs(ggs_images, ggs_dir, ggs_scale);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "pipeline failure: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
