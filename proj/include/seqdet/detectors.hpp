#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "seqdet/models.hpp"
#include "seqdet/rng.hpp"

namespace seqdet {

// Running statistic R_n with R_0 = 0; r is strictly positive once n >= 1.
struct SrState {
  double r = 0.0;
  std::uint64_t n = 0;
};

// Discounted variant for a geometric changepoint prior with parameter rho in
// [0, 1); rho = 0 reduces to SrState semantics.
struct ShiryaevState {
  double r_rho = 0.0;
  double rho = 0.0;
  std::uint64_t n = 0;
};

// One-sided reflected log likelihood-ratio random walk, W_0 = 0.
struct CusumState {
  double w = 0.0;
  std::uint64_t n = 0;
};

SrState sr_update(SrState state, double lr);
ShiryaevState shiryaev_update(ShiryaevState state, double lr);
CusumState cusum_update(CusumState state, double log_lr);

// Posterior probability that the change has already happened, given the
// discounted statistic. Undefined (throws std::domain_error) when rho == 0.
double shiryaev_posterior(const ShiryaevState& state);

enum class RuleKind { sr, shiryaev, cusum };

const char* to_string(RuleKind kind);
RuleKind rule_kind_from_string(const std::string& name);

// Statistic updates switch to log domain above this threshold so large
// targets cannot overflow the linear recursion.
inline constexpr double kLogDomainThreshold = 1e12;

// Stop at the first n >= 1 with statistic >= threshold (inclusive).
// For sr/shiryaev the threshold lives on the statistic scale; for cusum it is
// the log-scale level a > 0. rho is meaningful for shiryaev only.
struct ThresholdRule {
  RuleKind kind = RuleKind::sr;
  double threshold = 0.0;
  double rho = 0.0;

  // shiryaev: the equivalent posterior level A*rho/(1 + A*rho) in (0,1).
  double posterior_threshold() const;
};

void validate(const ThresholdRule& rule);

// log(1 + e^u), stable for large |u|.
inline double log1p_exp(double u) {
  if (u == -std::numeric_limits<double>::infinity()) return 0.0;
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

// One rule's statistic as an incrementally advanced value, with the
// linear-vs-log representation chosen once from the threshold.
class RuleStepper {
 public:
  explicit RuleStepper(const ThresholdRule& rule);

  void reset() noexcept { s_ = initial_; }
  double state() const noexcept { return s_; }
  void set_state(double s) noexcept { s_ = s; }
  // True when advance() expects log likelihood ratios.
  bool wants_log() const noexcept { return wants_log_; }

  // Consumes one likelihood ratio (plain or log per wants_log()) and reports
  // whether the statistic reached the threshold.
  bool advance(double lr_value) noexcept {
    switch (mode_) {
      case Mode::linear:
        s_ = (1.0 + s_) * lr_value * gain_;
        break;
      case Mode::log:
        s_ = log1p_exp(s_) + lr_value + log_gain_;
        break;
      case Mode::reflected:
        s_ = std::max(0.0, s_ + lr_value);
        break;
    }
    return s_ >= cutoff_;
  }

  bool advance_obs(const ObservationModel& model, double x) {
    return advance(wants_log_ ? log_likelihood_ratio(model, x)
                              : likelihood_ratio(model, x));
  }

 private:
  enum class Mode { linear, log, reflected };
  Mode mode_;
  bool wants_log_;
  double gain_ = 1.0;      // 1/(1-rho) for the linear recursion
  double log_gain_ = 0.0;  // -log(1-rho)
  double cutoff_;          // threshold on the stored scale
  double initial_;
  double s_;
};

struct RunLimits {
  std::uint64_t step_cap = 10'000'000;
};

// Stopping time of one run. When the step cap was hit first, n holds the cap
// and truncated is set (a censored value).
struct RunResult {
  std::uint64_t n = 0;
  bool truncated = false;
};

RunResult run_to_alarm(const ThresholdRule& rule, const ObservationModel& model,
                       const ChangeSpec& change, Engine& eng,
                       const RunLimits& limits = {});

// Same loop over a fixed likelihood-ratio sequence (deterministic, for tests
// and diagnostics). Throws std::invalid_argument if the sequence ends before
// the alarm or the cap.
RunResult run_to_alarm_lr(const ThresholdRule& rule, std::span<const double> lrs,
                          const RunLimits& limits = {});

struct MultiCyclicLimits {
  std::uint64_t max_cycles = 1'000'000;
  std::uint64_t step_cap = 100'000'000;  // total observation budget
};

// Repeated-cycle run: after each alarm the statistic restarts from zero while
// the observation clock keeps running. Cycle j ends at epoch alarm_epochs[j-1]
// (= cumulative sum of cycle_lengths). With a finite changepoint nu the run
// stops at the first alarm epoch >= nu and records j_nu (1-based) and
// detection_epoch; with never() it collects max_cycles cycles and j_nu
// stays 0.
struct MultiCyclicTrace {
  std::vector<std::uint64_t> cycle_lengths;
  std::vector<std::uint64_t> alarm_epochs;
  std::uint64_t j_nu = 0;
  std::uint64_t detection_epoch = 0;
  std::uint64_t nu = 0;  // 0 encodes never()
  bool truncated = false;
};

MultiCyclicTrace multicyclic_run(const ThresholdRule& rule,
                                 const ObservationModel& model,
                                 const ChangeSpec& change, Engine& eng,
                                 const MultiCyclicLimits& limits = {});

MultiCyclicTrace multicyclic_run_lr(const ThresholdRule& rule,
                                    std::span<const double> lrs,
                                    const ChangeSpec& change,
                                    const MultiCyclicLimits& limits = {});

// Cycle-level randomized rule: at the start of every cycle a fair coin picks
// which of the two single-cycle rules runs that cycle. Both must be sr kind
// over the same statistic scale.
struct MixtureRule {
  ThresholdRule first;
  ThresholdRule second;
};

void validate(const MixtureRule& rule);

struct MixtureTrace {
  MultiCyclicTrace base;
  std::vector<std::uint8_t> cycle_types;  // 0 = first rule, 1 = second rule
  int covering_type = -1;                 // type of cycle j_nu, -1 if unset
};

MixtureTrace mixture_multicyclic_run(const MixtureRule& rule,
                                     const ObservationModel& model,
                                     const ChangeSpec& change, Engine& eng,
                                     const MultiCyclicLimits& limits = {});

}  // namespace seqdet
