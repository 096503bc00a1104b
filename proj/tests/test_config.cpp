#include <doctest.h>

#include <string>

#include "seqdet/config.hpp"
#include "seqdet/errors.hpp"
#include "seqdet/models.hpp"

using namespace seqdet;

TEST_CASE("a complete experiment config parses into typed fields") {
  const ExperimentConfig cfg = parse_config_text(
      "# comment line\n"
      "family = bernoulli\n"
      "pre = 0.5\n"
      "post = 0.75\n"
      "rule = sr\n"
      "B = 2\n"
      "rho = 0.01\n"
      "c = 0.5\n"
      "nu = 40\n"
      "n_reps = 5000\n"
      "K = auto\n"
      "seed = 7\n"
      "rel_tol = 0.05\n"
      "out = results.csv  # trailing comment\n");
  REQUIRE(cfg.model.has_value());
  CHECK(cfg.model->family == Family::bernoulli);
  CHECK(cfg.model->pre == std::vector<double>{0.5});
  CHECK(cfg.model->post == std::vector<double>{0.75});
  REQUIRE(cfg.rule.has_value());
  CHECK(*cfg.rule == RuleKind::sr);
  CHECK_FALSE(cfg.threshold.has_value());
  REQUIRE(cfg.target_arl.has_value());
  CHECK(*cfg.target_arl == 2.0);
  CHECK(*cfg.rho == 0.01);
  CHECK(*cfg.delay_cost == 0.5);
  CHECK(*cfg.nu == 40);
  CHECK_FALSE(cfg.nu_infinite);
  CHECK(cfg.n_reps == 5000);
  CHECK(cfg.horizon == 0);
  CHECK(*cfg.seed == 7);
  CHECK(cfg.rel_tol == 0.05);
  CHECK(cfg.out == "results.csv");
}

TEST_CASE("defaults apply when keys are absent") {
  const ExperimentConfig cfg = parse_config_text("seed=1\n");
  CHECK_FALSE(cfg.model.has_value());
  CHECK(cfg.n_reps == 10000);
  CHECK(cfg.rel_tol == 0.02);
  CHECK(cfg.horizon == 0);
  CHECK(cfg.rules.empty());
  CHECK(cfg.out.empty());
}

TEST_CASE("gaussian family accepts an optional shared variance") {
  const ExperimentConfig cfg = parse_config_text(
      "family=gaussian\npre=0,2\npost=1,2\nseed=1\n");
  REQUIRE(cfg.model.has_value());
  CHECK(cfg.model->family == Family::gaussian_mean_shift);
  CHECK(cfg.model->pre == std::vector<double>{0.0, 2.0});
  CHECK_THROWS_AS(
      parse_config_text("family=gaussian\npre=0,2\npost=1,3\nseed=1\n"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("family=gaussian\npre=0\npost=1,2\nseed=1\n"),
      ConfigError);
}

TEST_CASE("rule list and the infinite changepoint parse") {
  const ExperimentConfig cfg =
      parse_config_text("rules=sr, cusum\nnu=inf\nK=128\nseed=1\n");
  REQUIRE(cfg.rules.size() == 2);
  CHECK(cfg.rules[0] == RuleKind::sr);
  CHECK(cfg.rules[1] == RuleKind::cusum);
  CHECK(cfg.nu_infinite);
  CHECK_FALSE(cfg.nu.has_value());
  CHECK(cfg.horizon == 128);
}

TEST_CASE("typos and malformed lines are rejected with the line number") {
  try {
    parse_config_text("family=bernoulli\npre=0.5\npost=0.75\nnreps=10\n");
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("config line 4") != std::string::npos);
    CHECK(std::string(e.what()).find("nreps") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("seed=1\nseed=2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("just some words\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("B=\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("B=abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("B=2x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("n_reps=-5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("rule=page\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("family=cauchy\npre=0\npost=1\n"),
                  ConfigError);
}

TEST_CASE("value-range validation") {
  CHECK_THROWS_AS(parse_config_text("threshold=0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("B=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("rho=1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("c=0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("nu=0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("n_reps=0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("rel_tol=0.2\n"), ConfigError);
}

TEST_CASE("cross-field rules") {
  CHECK_THROWS_AS(parse_config_text("threshold=1.4\nB=2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("family=bernoulli\npre=0.5\nseed=1\n"),
                  ConfigError);
  // threshold alone is fine; which commands need what is checked later
  CHECK_NOTHROW(parse_config_text("threshold=1.4\nseed=1\n"));
}

TEST_CASE("missing config files are a config error") {
  CHECK_THROWS_AS((void)parse_config_file("/nonexistent/path/x.cfg"),
                  ConfigError);
}
