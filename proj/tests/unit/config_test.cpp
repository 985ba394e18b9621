#include <doctest.h>

#include <set>
#include <sstream>

#include "dynpl/config.hpp"

using namespace dynpl;

TEST_SUITE("config") {
  TEST_CASE("keys are unique and all readable") {
    const RunConfig c;
    std::set<std::string> names;
    for (const auto& k : config_keys()) {
      CHECK(names.insert(k.name).second);
      CHECK_NOTHROW(get_config_value(c, k.name));
    }
    CHECK(names.count("tau_pt"));
    CHECK(names.count("point_grid"));
  }

  TEST_CASE("echo round trips through the config parser") {
    RunConfig a;
    a.tau_pt = 6.25;
    a.rho = 3.5;
    a.exclusion_window = 12;
    a.enable_loop = false;
    a.llg_aggregation = LlgAggregation::sum;
    a.seed = 1234567890123ULL;
    std::ostringstream echo;
    write_config_echo(echo, a);

    RunConfig b;
    std::istringstream in(echo.str());
    apply_config_stream(b, in, "echo");
    for (const auto& k : config_keys()) CHECK(get_config_value(a, k.name) == get_config_value(b, k.name));
    CHECK(b.tau_pt == 6.25);
    CHECK_FALSE(b.enable_loop);
    CHECK(b.llg_aggregation == LlgAggregation::sum);
    CHECK(b.seed == 1234567890123ULL);
  }

  TEST_CASE("echo lines carry the provenance marker") {
    std::ostringstream echo;
    write_config_echo(echo, RunConfig{});
    std::istringstream in(echo.str());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      const bool method = line.ends_with("  # method");
      const bool repo = line.ends_with("  # repo");
      CHECK((method || repo));
    }
    CHECK(n == config_keys().size());
    CHECK(echo.str().find("point_grid = 64x48  # method\n") != std::string::npos);
  }

  TEST_CASE("unknown keys and bad values are rejected") {
    RunConfig c;
    CHECK_THROWS_AS(set_config_value(c, "no_such_key", "1"), ConfigError);
    CHECK_THROWS_AS(set_config_value(c, "tau_pt", "abc"), ConfigError);
    CHECK_THROWS_AS(set_config_value(c, "tau_pt", "nan"), ConfigError);
    CHECK_THROWS_AS(set_config_value(c, "huber_delta", "0"), ConfigError);
    CHECK_THROWS_AS(set_config_value(c, "lm_max_iters", "0"), ConfigError);
    CHECK_THROWS_AS(set_config_value(c, "enable_loop", "maybe"), ConfigError);
    CHECK_THROWS_AS(set_config_value(c, "llg_aggregation", "median"), ConfigError);
    CHECK(c.tau_pt == RunConfig{}.tau_pt);
  }

  TEST_CASE("grid layouts are fixed") {
    RunConfig c;
    CHECK_NOTHROW(set_config_value(c, "point_grid", "64x48"));
    CHECK_THROWS_AS(set_config_value(c, "point_grid", "32x24"), ConfigError);
    CHECK_THROWS_AS(set_config_value(c, "ggs_grid", "4x4"), ConfigError);
  }

  TEST_CASE("stream errors name the line") {
    RunConfig c;
    std::istringstream in("# comment\n\ntau_pt = 5\nbogus = 1\n");
    try {
      apply_config_stream(c, in, "run.cfg");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("run.cfg:4:") == 0);
    }
    CHECK(c.tau_pt == 5.0);
  }

  TEST_CASE("overrides") {
    RunConfig c;
    apply_override(c, "rho=7.5");
    CHECK(c.rho == 7.5);
    CHECK_THROWS_AS(apply_override(c, "rho"), ConfigError);
    CHECK_THROWS_AS(apply_config_file(c, "/nonexistent/dir/x.cfg"), ConfigError);
  }
}
