// Experiment front end: calibrate thresholds, measure operating
// characteristics, compare procedures at a matched false-alarm rate, run the
// repeated-application experiment, and run the numerical self-checks.
//
// Exit codes: 0 success, 1 usage or config error, 2 numerical or calibration
// failure, 3 self-check failure.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "seqdet/calibration.hpp"
#include "seqdet/config.hpp"
#include "seqdet/detectors.hpp"
#include "seqdet/errors.hpp"
#include "seqdet/metrics.hpp"
#include "seqdet/models.hpp"
#include "seqdet/report.hpp"
#include "seqdet/rng.hpp"
#include "seqdet/verify.hpp"

namespace {

using namespace seqdet;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0 = all logical cores
  std::string out_path;
};

ExperimentConfig load_config(const CommonOpts& opts, bool required) {
  if (opts.config_path.empty()) {
    if (required)
      throw std::invalid_argument("this subcommand needs --config <file>");
    return {};
  }
  return parse_config_file(opts.config_path);
}

std::uint64_t resolve_seed(const CommonOpts& opts,
                           const ExperimentConfig& cfg) {
  if (opts.seed) return *opts.seed;
  if (cfg.seed) return *cfg.seed;
  throw std::invalid_argument(
      "a seed is required for every run: set seed= in the config or pass "
      "--seed");
}

std::string resolve_out(const CommonOpts& opts, const ExperimentConfig& cfg) {
  return opts.out_path.empty() ? cfg.out : opts.out_path;
}

McContext make_ctx(std::uint64_t seed, int threads) {
  McContext ctx;
  ctx.seed = seed;
  ctx.threads = threads;
  return ctx;
}

const ObservationModel& require_model(const ExperimentConfig& cfg) {
  if (!cfg.model)
    throw std::invalid_argument(
        "the config must specify a model: family, pre, post");
  return *cfg.model;
}

RuleKind require_rule_kind(const ExperimentConfig& cfg) {
  if (!cfg.rule)
    throw std::invalid_argument("the config must specify rule=<sr|shiryaev|cusum>");
  return *cfg.rule;
}

double shiryaev_rho(const ExperimentConfig& cfg) {
  if (!cfg.rho)
    throw std::invalid_argument("the shiryaev rule needs rho= in the config");
  return *cfg.rho;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::invalid_argument("cannot open output file: " + path);
  out << text;
  if (!out)
    throw std::invalid_argument("failed writing output file: " + path);
}

nlohmann::ordered_json model_json(const ObservationModel& model) {
  nlohmann::ordered_json j;
  j["family"] = to_string(model.family);
  j["pre"] = model.pre;
  j["post"] = model.post;
  return j;
}

nlohmann::ordered_json rule_json(const ThresholdRule& rule) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(rule.kind);
  j["threshold"] = rule.threshold;
  if (rule.kind == RuleKind::shiryaev) j["rho"] = rule.rho;
  return j;
}

double binom_se(double p, std::uint64_t n) {
  if (n == 0) return 0.0;
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

// Resolves the rule for estimation commands: either the fixed threshold from
// the config or a fresh calibration to the target mean run length. The
// calibration, when one happens, consumes one seed from `seq`.
struct ResolvedRule {
  ThresholdRule rule;
  std::optional<CalibrationResult> calibration;
  std::optional<double> target_arl;
};

ResolvedRule resolve_rule(const ExperimentConfig& cfg, SeedSequence& seq,
                          int threads) {
  const RuleKind kind = require_rule_kind(cfg);
  const double rho = kind == RuleKind::shiryaev ? shiryaev_rho(cfg) : 0.0;
  if (cfg.threshold) {
    return {ThresholdRule{kind, *cfg.threshold, rho}, std::nullopt,
            std::nullopt};
  }
  if (!cfg.target_arl)
    throw std::invalid_argument(
        "the config must set either threshold= or B= for this subcommand");
  CalibrationSettings settings;
  settings.rel_tol = cfg.rel_tol;
  const CalibrationResult cal =
      calibrate_threshold(kind, require_model(cfg), *cfg.target_arl, settings,
                          make_ctx(seq.next(), threads), rho);
  return {cal.rule, cal, cfg.target_arl};
}

int cmd_calibrate(const CommonOpts& opts) {
  const ExperimentConfig cfg = load_config(opts, true);
  const std::uint64_t seed = resolve_seed(opts, cfg);
  const ObservationModel& model = require_model(cfg);
  const RuleKind kind = require_rule_kind(cfg);
  if (!cfg.target_arl)
    throw std::invalid_argument("calibrate needs B= (the target mean run length)");
  const double rho = kind == RuleKind::shiryaev ? shiryaev_rho(cfg) : 0.0;

  CalibrationSettings settings;
  settings.rel_tol = cfg.rel_tol;
  settings.n_reps = cfg.n_reps;
  const CalibrationResult cal =
      calibrate_threshold(kind, model, *cfg.target_arl, settings,
                          make_ctx(seed, opts.threads), rho);

  nlohmann::ordered_json record;
  record["kind"] = to_string(kind);
  record["B"] = *cfg.target_arl;
  record["A"] = cal.rule.threshold;
  if (kind == RuleKind::shiryaev) record["rho"] = rho;
  record["arl_estimate"] = cal.arl.mean;
  record["std_err"] = cal.arl.std_err;
  record["n_reps"] = cal.arl.n_reps;
  record["seed"] = seed;
  const std::string text = render_json(record);
  std::cout << text;
  const std::string out = resolve_out(opts, cfg);
  if (!out.empty()) write_text_file(out, text);
  return 0;
}

int cmd_oc(const CommonOpts& opts) {
  const ExperimentConfig cfg = load_config(opts, true);
  const std::uint64_t seed = resolve_seed(opts, cfg);
  const ObservationModel& model = require_model(cfg);

  SeedSequence seq(seed);
  const ResolvedRule rr = resolve_rule(cfg, seq, opts.threads);
  const OperatingCharacteristics oc = operating_characteristics(
      rr.rule, model, cfg.horizon, cfg.n_reps, make_ctx(seq.next(), opts.threads));
  const Estimate cm = integral_add_cm(rr.rule, model, cfg.n_reps,
                                      make_ctx(seq.next(), opts.threads));
  const std::uint64_t nu =
      cfg.nu ? *cfg.nu
             : static_cast<std::uint64_t>(std::ceil(10.0 * oc.arl2fa.mean));
  const Estimate direct = stationary_add_direct(
      rr.rule, model, nu, cfg.n_reps, make_ctx(seq.next(), opts.threads));
  const ResidualTimeDist resid = residual_time_dist(
      rr.rule, model, nu, cfg.n_reps, make_ctx(seq.next(), opts.threads));

  nlohmann::ordered_json summary;
  summary["model"] = model_json(model);
  summary["rule"] = rule_json(rr.rule);
  if (rr.calibration) summary["calibration"] = to_json(*rr.calibration);
  summary["seed"] = seed;
  summary["n_reps"] = cfg.n_reps;
  summary["nu"] = nu;
  summary["oc"] = to_json(oc);
  summary["integral_add_cm"] = to_json(cm);
  summary["stationary_add_direct"] = to_json(direct);
  summary["residual_mass"] = resid.mass;
  const std::string text = render_json(summary);
  std::cout << text;

  const std::string out = resolve_out(opts, cfg);
  if (!out.empty()) {
    std::ostringstream csv;
    CsvWriter w(csv);
    const std::string name = to_string(rr.rule.kind);
    w.row({name, "arl2fa", std::nullopt, oc.arl2fa.mean, oc.arl2fa.std_err,
           oc.arl2fa.n_reps, seed});
    w.row({name, "integral_add_direct", std::nullopt, oc.integral_add.value,
           oc.integral_add.std_err, oc.integral_add.n_reps, seed});
    w.row({name, "integral_add_cm", std::nullopt, cm.value, cm.std_err,
           cm.n_reps, seed});
    w.row({name, "stationary_add_formula", std::nullopt,
           oc.stationary_add.value, oc.stationary_add.std_err,
           oc.stationary_add.n_reps, seed});
    w.row({name, "stationary_add_direct", std::nullopt, direct.value,
           direct.std_err, direct.n_reps, seed});
    w.row({name, "sup_conditional_add", std::nullopt, oc.sup_conditional_add,
           0.0, oc.arl2fa.n_reps, seed});
    for (std::size_t i = 0; i < oc.survival.size(); ++i)
      w.row({name, "survival", i + 1, oc.survival[i],
             binom_se(oc.survival[i], oc.arl2fa.n_reps), oc.arl2fa.n_reps,
             seed});
    for (std::size_t i = 0; i < oc.conditional_add.size(); ++i)
      w.row({name, "conditional_add", i + 1, oc.conditional_add[i].value,
             oc.conditional_add[i].std_err, oc.conditional_add[i].n_reps,
             seed});
    std::size_t last = resid.mass.size();
    while (last > 0 && resid.mass[last - 1] == 0.0) --last;
    for (std::size_t i = 0; i < last; ++i)
      w.row({name, "residual_mass", i + 1, resid.mass[i],
             binom_se(resid.mass[i], resid.n_reps), resid.n_reps, seed});
    write_text_file(out, csv.str());
  }
  return 0;
}

int cmd_compare(const CommonOpts& opts) {
  const ExperimentConfig cfg = load_config(opts, true);
  const std::uint64_t seed = resolve_seed(opts, cfg);
  const ObservationModel& model = require_model(cfg);
  if (cfg.rules.size() < 2)
    throw std::invalid_argument(
        "compare needs rules=<kind,kind,...> with at least two entries");
  if (!cfg.target_arl)
    throw std::invalid_argument("compare needs B= (the shared mean run length)");

  SeedSequence seq(seed);
  std::vector<std::pair<std::string, CalibrationResult>> calibrated;
  std::vector<int> kind_count(3, 0);
  CalibrationSettings settings;
  settings.rel_tol = cfg.rel_tol;
  for (const RuleKind kind : cfg.rules) {
    const double rho = kind == RuleKind::shiryaev ? shiryaev_rho(cfg) : 0.0;
    std::string name = to_string(kind);
    const int count = ++kind_count[static_cast<int>(kind)];
    if (count > 1) name += "#" + std::to_string(count);
    calibrated.emplace_back(
        std::move(name),
        calibrate_threshold(kind, model, *cfg.target_arl, settings,
                            make_ctx(seq.next(), opts.threads), rho));
  }
  const ComparisonReport report =
      compare_rules(calibrated, model, *cfg.target_arl, cfg.rel_tol,
                    cfg.n_reps, make_ctx(seq.next(), opts.threads));

  nlohmann::ordered_json summary = to_json(report);
  summary["model"] = model_json(model);
  summary["seed"] = seed;
  summary["n_reps"] = cfg.n_reps;
  const std::string text = render_json(summary);
  std::cout << text;

  const std::string out = resolve_out(opts, cfg);
  if (!out.empty()) {
    std::ostringstream csv;
    CsvWriter w(csv);
    for (const RuleMetricsRow& row : report.rows) {
      w.row({row.name, "arl2fa", std::nullopt, row.arl.mean, row.arl.std_err,
             row.arl.n_reps, seed});
      w.row({row.name, "integral_add", std::nullopt, row.integral_add.value,
             row.integral_add.std_err, row.integral_add.n_reps, seed});
      w.row({row.name, "stationary_add", std::nullopt,
             row.stationary_add.value, row.stationary_add.std_err,
             row.stationary_add.n_reps, seed});
    }
    write_text_file(out, csv.str());
  }
  return 0;
}

int cmd_multicyclic(const CommonOpts& opts) {
  const ExperimentConfig cfg = load_config(opts, true);
  const std::uint64_t seed = resolve_seed(opts, cfg);
  const ObservationModel& model = require_model(cfg);
  if (!cfg.nu && !cfg.nu_infinite)
    throw std::invalid_argument("multicyclic needs nu=<count> or nu=inf");

  SeedSequence seq(seed);
  const ResolvedRule rr = resolve_rule(cfg, seq, opts.threads);
  const std::string name = to_string(rr.rule.kind);

  nlohmann::ordered_json summary;
  summary["model"] = model_json(model);
  summary["rule"] = rule_json(rr.rule);
  if (rr.calibration) summary["calibration"] = to_json(*rr.calibration);
  summary["seed"] = seed;
  summary["n_reps"] = cfg.n_reps;

  std::ostringstream csv;
  CsvWriter w(csv);
  if (cfg.nu_infinite) {
    // No change ever happens: cycle lengths are iid copies of the run length.
    const ArlEstimate arl = estimate_arl2fa(rr.rule, model, cfg.n_reps,
                                            make_ctx(seq.next(), opts.threads));
    summary["nu"] = "inf";
    summary["mean_cycle_length"] = to_json(arl);
    w.row({name, "mean_cycle_length", std::nullopt, arl.mean, arl.std_err,
           arl.n_reps, seed});
  } else {
    const std::uint64_t nu = *cfg.nu;
    const Estimate delay = stationary_add_direct(
        rr.rule, model, nu, cfg.n_reps, make_ctx(seq.next(), opts.threads));
    const ResidualTimeDist resid = residual_time_dist(
        rr.rule, model, nu, cfg.n_reps, make_ctx(seq.next(), opts.threads));
    summary["nu"] = nu;
    summary["multicyclic_delay"] = to_json(delay);
    summary["residual_mass"] = resid.mass;
    w.row({name, "multicyclic_delay", std::nullopt, delay.value,
           delay.std_err, delay.n_reps, seed});
    std::size_t last = resid.mass.size();
    while (last > 0 && resid.mass[last - 1] == 0.0) --last;
    for (std::size_t i = 0; i < last; ++i)
      w.row({name, "residual_mass", i + 1, resid.mass[i],
             binom_se(resid.mass[i], resid.n_reps), resid.n_reps, seed});
  }
  const std::string text = render_json(summary);
  std::cout << text;
  const std::string out = resolve_out(opts, cfg);
  if (!out.empty()) write_text_file(out, csv.str());
  return 0;
}

int cmd_verify(const CommonOpts& opts, const std::string& profile_name) {
  const ExperimentConfig cfg = load_config(opts, false);
  const std::uint64_t seed = resolve_seed(opts, cfg);
  const VerifyProfile profile = verify_profile_from_string(profile_name);
  const unsigned threads =
      opts.threads > 0 ? static_cast<unsigned>(opts.threads) : 0u;
  const VerifyReport report = run_verify(profile, seed, threads);
  const std::string text = format_verify_report(report);
  std::cout << text;
  const std::string out = resolve_out(opts, cfg);
  if (!out.empty()) write_text_file(out, text);
  return report.all_pass() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequential changepoint detection experiments"};
  app.require_subcommand(0, 1);

  CommonOpts opts;
  std::string profile_name = "quick";

  const auto add_common = [&](CLI::App* sub, bool with_profile) {
    sub->add_option("--config", opts.config_path,
                    "experiment config file (flat key=value lines)");
    sub->add_option("--seed", opts.seed,
                    "master seed (overrides the config seed)");
    sub->add_option("--threads", opts.threads,
                    "worker threads (default: all logical cores)");
    sub->add_option("--out", opts.out_path,
                    "output file (overrides the config out path)");
    if (with_profile)
      sub->add_option("--profile", profile_name, "quick or full")
          ->check(CLI::IsMember({"quick", "full"}));
  };

  CLI::App* cal = app.add_subcommand(
      "calibrate", "find the threshold matching a target mean run length");
  CLI::App* oc = app.add_subcommand(
      "oc", "estimate the operating characteristics of one rule");
  CLI::App* compare = app.add_subcommand(
      "compare", "side-by-side delay metrics at a matched false-alarm rate");
  CLI::App* multicyclic = app.add_subcommand(
      "multicyclic", "repeated-application experiment with a late change");
  CLI::App* verify =
      app.add_subcommand("verify", "run the numerical self-checks");
  add_common(cal, false);
  add_common(oc, false);
  add_common(compare, false);
  add_common(multicyclic, false);
  add_common(verify, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(cal)) return cmd_calibrate(opts);
    if (app.got_subcommand(oc)) return cmd_oc(opts);
    if (app.got_subcommand(compare)) return cmd_compare(opts);
    if (app.got_subcommand(multicyclic)) return cmd_multicyclic(opts);
    if (app.got_subcommand(verify)) return cmd_verify(opts, profile_name);
    std::cerr << app.help() << std::flush;
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const CalibrationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const EstimationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ComparisonError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const UnsupportedModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
