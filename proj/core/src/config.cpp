#include "dynpl/config.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <variant>

#include "dynpl/text.hpp"

namespace dynpl {

namespace {

struct GridKey {
  const char* fixed_value;
};
struct AggregationKey {};

using Field = std::variant<double RunConfig::*, int RunConfig::*, bool RunConfig::*, std::uint64_t RunConfig::*,
                           GridKey, AggregationKey>;

struct Entry {
  const char* name;
  Provenance provenance;
  Field field;
  double min_value = 0.0;  // numeric lower bound, inclusive
  bool strictly_positive = false;
};

constexpr auto P = Provenance::method;
constexpr auto R = Provenance::repo;

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {"alpha_point", P, &RunConfig::alpha_point, 0.0, true},
      {"point_filter_epsilon", R, &RunConfig::point_filter_epsilon},
      {"line_mean_factor", P, &RunConfig::line_mean_factor, 0.0, true},
      {"stereo_row_tolerance", R, &RunConfig::stereo_row_tolerance},
      {"stereo_max_disparity", R, &RunConfig::stereo_max_disparity, 0.0, true},
      {"point_grid", P, GridKey{"64x48"}},
      {"ggs_grid", P, GridKey{"3x4"}},
      {"ggs_scale", P, &RunConfig::ggs_scale, 0.0, true},
      {"kf_coeff", P, &RunConfig::kf_coeff},
      {"kf_bootstrap_factor", R, &RunConfig::kf_bootstrap_factor, 0.0, true},
      {"kf_min_interval", R, &RunConfig::kf_min_interval, 1.0},
      {"kf_max_interval", R, &RunConfig::kf_max_interval, 1.0},
      {"tau_pt", R, &RunConfig::tau_pt},
      {"rho", R, &RunConfig::rho},
      {"llg_aggregation", R, AggregationKey{}},
      {"min_disparity", R, &RunConfig::min_disparity},
      {"huber_delta", R, &RunConfig::huber_delta, 0.0, true},
      {"edge_margin", R, &RunConfig::edge_margin},
      {"lm_lambda", R, &RunConfig::lm_lambda, 0.0, true},
      {"lm_lambda_up", R, &RunConfig::lm_lambda_up, 1.0},
      {"lm_lambda_down", R, &RunConfig::lm_lambda_down, 0.0, true},
      {"lm_max_iters", R, &RunConfig::lm_max_iters, 1.0},
      {"lm_step_tol", R, &RunConfig::lm_step_tol},
      {"lm_cost_tol", R, &RunConfig::lm_cost_tol},
      {"covis_min", P, &RunConfig::covis_min, 1.0},
      {"association_gate_px", R, &RunConfig::association_gate_px, 0.0, true},
      {"ba_max_iters", R, &RunConfig::ba_max_iters},
      {"global_ba_max_iters", R, &RunConfig::global_ba_max_iters},
      {"lc_alpha", P, &RunConfig::lc_alpha},
      {"inlier_min", P, &RunConfig::inlier_min},
      {"lc_rat_min", P, &RunConfig::lc_rat_min},
      {"exclusion_window", R, &RunConfig::exclusion_window},
      {"neighbor_factor", R, &RunConfig::neighbor_factor, 0.0, true},
      {"sim_factor", R, &RunConfig::sim_factor, 0.0, true},
      {"max_drift_fraction", R, &RunConfig::max_drift_fraction},
      {"loop_inlier_px", R, &RunConfig::loop_inlier_px, 0.0, true},
      {"pgo_covis_ratio", P, &RunConfig::pgo_covis_ratio},
      {"enable_dynamic", R, &RunConfig::enable_dynamic},
      {"enable_loop", R, &RunConfig::enable_loop},
      {"enable_lines", R, &RunConfig::enable_lines},
      {"strict_paper_lcd", R, &RunConfig::strict_paper_lcd},
      {"seed", R, &RunConfig::seed},
  };
  return table;
}

const Entry& find_entry(std::string_view key) {
  for (const auto& e : entries()) {
    if (key == e.name) return e;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const Entry& e, std::string_view value, const char* why) {
  throw ConfigError(std::string("invalid value '") + std::string(value) + "' for " + e.name + ": " + why);
}

void check_range(const Entry& e, double v, std::string_view raw) {
  if (!std::isfinite(v)) bad_value(e, raw, "not finite");
  if (e.strictly_positive && !(v > 0.0)) bad_value(e, raw, "must be positive");
  if (v < e.min_value) bad_value(e, raw, "below minimum");
}

}  // namespace

const std::vector<ConfigKeyInfo>& config_keys() {
  static const std::vector<ConfigKeyInfo> keys = [] {
    std::vector<ConfigKeyInfo> k;
    for (const auto& e : entries()) k.push_back({e.name, e.provenance});
    return k;
  }();
  return keys;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view raw) {
  const Entry& e = find_entry(trim(key));
  const std::string_view value = trim(raw);
  std::visit(
      [&](auto&& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, double RunConfig::*>) {
          double v = 0.0;
          if (!parse_double(value, v)) bad_value(e, value, "not a number");
          check_range(e, v, value);
          config.*f = v;
        } else if constexpr (std::is_same_v<F, int RunConfig::*>) {
          int v = 0;
          if (!parse_int(value, v)) bad_value(e, value, "not an integer");
          check_range(e, v, value);
          config.*f = v;
        } else if constexpr (std::is_same_v<F, std::uint64_t RunConfig::*>) {
          std::uint64_t v = 0;
          if (!parse_int(value, v)) bad_value(e, value, "not an unsigned integer");
          config.*f = v;
        } else if constexpr (std::is_same_v<F, bool RunConfig::*>) {
          if (value == "true" || value == "1" || value == "on") {
            config.*f = true;
          } else if (value == "false" || value == "0" || value == "off") {
            config.*f = false;
          } else {
            bad_value(e, value, "not a boolean");
          }
        } else if constexpr (std::is_same_v<F, GridKey>) {
          if (value != f.fixed_value) bad_value(e, value, "grid layout is fixed");
        } else {
          if (value == "mean") {
            config.llg_aggregation = LlgAggregation::mean;
          } else if (value == "sum") {
            config.llg_aggregation = LlgAggregation::sum;
          } else {
            bad_value(e, value, "expected mean or sum");
          }
        }
      },
      e.field);
}

std::string get_config_value(const RunConfig& config, std::string_view key) {
  const Entry& e = find_entry(key);
  return std::visit(
      [&](auto&& f) -> std::string {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, double RunConfig::*>) {
          return format_double(config.*f);
        } else if constexpr (std::is_same_v<F, int RunConfig::*> ||
                             std::is_same_v<F, std::uint64_t RunConfig::*>) {
          return std::to_string(config.*f);
        } else if constexpr (std::is_same_v<F, bool RunConfig::*>) {
          return config.*f ? "true" : "false";
        } else if constexpr (std::is_same_v<F, GridKey>) {
          return f.fixed_value;
        } else {
          return config.llg_aggregation == LlgAggregation::mean ? "mean" : "sum";
        }
      },
      e.field);
}

void apply_config_stream(RunConfig& config, std::istream& in, const std::string& source) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    try {
      if (eq == std::string_view::npos) throw ConfigError("expected key=value");
      set_config_value(config, s.substr(0, eq), s.substr(eq + 1));
    } catch (const ConfigError& err) {
      throw ConfigError(source + ":" + std::to_string(number) + ": " + err.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  apply_config_stream(config, in, path.string());
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  set_config_value(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

void write_config_echo(std::ostream& out, const RunConfig& config) {
  for (const auto& k : config_keys()) {
    out << k.name << " = " << get_config_value(config, k.name) << "  # "
        << (k.provenance == Provenance::method ? "method" : "repo") << '\n';
  }
}

}  // namespace dynpl
