#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqdet/detectors.hpp"
#include "seqdet/models.hpp"

namespace seqdet {

// Flat key=value experiment configuration. Parsing rejects unknown and
// duplicated keys outright: a silent typo in an experiment config corrupts a
// study. '#' starts a comment; blank lines are ignored.
//
// Keys: family, pre, post, rule, rules, threshold, B, rho, c, nu, n_reps, K,
// seed, rel_tol, out. `pre`/`post` are comma-separated parameter lists
// (gaussian: mean[,variance]; bernoulli: success probability; exponential:
// rate). `nu` accepts "inf". `K` accepts "auto" (same as 0). At most one of
// `threshold`/`B` may be given; which one is required depends on the command.
struct ExperimentConfig {
  std::optional<ObservationModel> model;
  std::optional<RuleKind> rule;
  std::vector<RuleKind> rules;  // `rules` key, for side-by-side comparison
  std::optional<double> threshold;
  std::optional<double> target_arl;  // `B`
  std::optional<double> rho;
  std::optional<double> delay_cost;  // `c`
  std::optional<std::uint64_t> nu;   // empty + nu_infinite for "inf"
  bool nu_infinite = false;
  std::uint64_t n_reps = 10000;
  std::uint64_t horizon = 0;  // `K`; 0 = auto
  std::optional<std::uint64_t> seed;
  double rel_tol = 0.02;
  std::string out;
};

ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace seqdet
