#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dynpl/dynamics.hpp"
#include "dynpl/ggs.hpp"

namespace dynpl {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Every tunable of the pipeline with its default.
struct RunConfig {
  // association
  double alpha_point = kDefaultPointAlpha;
  double point_filter_epsilon = kDefaultPointEpsilon;
  double line_mean_factor = kDefaultLineMeanFactor;
  double stereo_row_tolerance = 1.0;
  double stereo_max_disparity = 96.0;
  // ggs and keyframes
  double ggs_scale = kDefaultGgsScale;
  double kf_coeff = kDefaultKeyframeCoeff;
  double kf_bootstrap_factor = 4.0;
  int kf_min_interval = 2;
  int kf_max_interval = 8;
  // dynamics
  double tau_pt = kDefaultTauPoint;
  double rho = kDefaultRhoLine;
  LlgAggregation llg_aggregation = LlgAggregation::mean;
  double min_disparity = kDefaultMinDisparity;
  // estimation
  double huber_delta = 2.0;
  double edge_margin = 20.0;
  double lm_lambda = 1e-4;
  double lm_lambda_up = 10.0;
  double lm_lambda_down = 0.5;
  int lm_max_iters = 30;
  double lm_step_tol = 1e-8;
  double lm_cost_tol = 1e-9;
  // mapping
  int covis_min = 20;
  double association_gate_px = 8.0;
  int ba_max_iters = 10;
  int global_ba_max_iters = 20;
  // loop closure
  double lc_alpha = 0.001;
  double inlier_min = 0.5;
  double lc_rat_min = 0.2;
  int exclusion_window = 30;
  double neighbor_factor = 1.5;
  double sim_factor = 2.0;
  double max_drift_fraction = 0.1;
  double loop_inlier_px = 3.0;
  double pgo_covis_ratio = 0.2;
  // switches
  bool enable_dynamic = true;
  bool enable_loop = true;
  bool enable_lines = true;
  bool strict_paper_lcd = false;
  std::uint64_t seed = 0;
};

// `method`: constant that defines the method; `repo`: chosen here.
enum class Provenance { method, repo };

struct ConfigKeyInfo {
  std::string name;
  Provenance provenance;
};

/// All keys in echo order.
const std::vector<ConfigKeyInfo>& config_keys();

/// Throws ConfigError for unknown keys, unparsable values, values out of
/// range, or attempts to change the fixed grid layouts.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& config, std::string_view key);

/// Applies `key=value` lines; blank lines and `#` comments are ignored.
/// Errors carry the line number.
void apply_config_stream(RunConfig& config, std::istream& in, const std::string& source = "config");
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Parses `key=value`; throws ConfigError without '='.
void apply_override(RunConfig& config, std::string_view assignment);

/// One `key = value  # method|repo` line per key, resolved values.
void write_config_echo(std::ostream& out, const RunConfig& config);

}  // namespace dynpl
