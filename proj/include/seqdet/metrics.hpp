#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seqdet/calibration.hpp"
#include "seqdet/detectors.hpp"
#include "seqdet/mc.hpp"
#include "seqdet/models.hpp"

namespace seqdet {

struct Estimate {
  double value = 0.0;
  double std_err = 0.0;
  std::uint64_t n_reps = 0;
};

// Auto horizon: report the smallest k whose no-change survival estimate
// P(N >= k) falls below this floor.
inline constexpr double kSurvivalFloor = 1e-4;
// Conditional estimates with acceptance rates below this floor are unusable.
inline constexpr double kAcceptanceFloor = 1e-3;

// Per-changepoint operating characteristics of one rule, all estimated from a
// single coupled sweep: each replication simulates one no-change trajectory,
// records the statistic along it, and restarts from the stored state with
// post-change draws for every changepoint k it survived past. Every k
// therefore sees all n_reps replications, and per-replication totals give the
// standard error of the summed delay.
struct OperatingCharacteristics {
  ArlEstimate arl2fa;
  Estimate integral_add;           // sum over k of E(N - k)^+ through sum_horizon
  double tail_bound = 0.0;         // bound on the neglected mass beyond sum_horizon
  std::uint64_t horizon = 0;       // reported K: smallest k with survival < kSurvivalFloor
  std::uint64_t sum_horizon = 0;   // k range the integral actually summed (>= horizon)
  bool horizon_ok = false;         // survival did drop below the floor in range
  std::vector<double> survival;          // P(N >= k), k = 1..horizon
  std::vector<Estimate> conditional_add; // E[N - k | N >= k]; n_reps = accepted count
  std::vector<double> weights;           // survival normalized by the mean run length
  Estimate stationary_add;         // integral / arl2fa with a delta-method std err
  double sup_conditional_add = 0.0;
};

// k_request = 0 selects the horizon automatically (pilot run sizes the sweep).
OperatingCharacteristics operating_characteristics(
    const ThresholdRule& rule, const ObservationModel& model,
    std::uint64_t k_request, std::uint64_t n_reps, const McContext& ctx,
    const RunLimits& limits = {});

// Rejection-sampling estimate of E[N - k | N >= k] under a change at k:
// simulate with the change at k, discard runs that alarmed before k. Throws
// EstimationError when the acceptance rate is below kAcceptanceFloor.
Estimate conditional_add(const ThresholdRule& rule,
                         const ObservationModel& model, std::uint64_t k,
                         std::uint64_t n_reps, const McContext& ctx,
                         const RunLimits& limits = {});

struct IntegralAddEstimate {
  Estimate total;
  double tail_bound = 0.0;
  std::uint64_t horizon = 0;
};

// Direct estimate of the summed detection delay over changepoints 1..k_cap,
// plus a bound on the neglected tail (largest observed conditional delay
// times the estimated survival mass beyond k_cap).
IntegralAddEstimate integral_add_direct(const ThresholdRule& rule,
                                        const ObservationModel& model,
                                        std::uint64_t k_cap,
                                        std::uint64_t n_reps,
                                        const McContext& ctx,
                                        const RunLimits& limits = {});

// Change-of-measure estimate of the same sum: simulate under no change only
// and average the running sum of the sr statistic up to (not including) the
// alarm. Works for any rule kind; the accumulated statistic is always the sr
// one for the given model.
Estimate integral_add_cm(const ThresholdRule& rule,
                         const ObservationModel& model, std::uint64_t n_reps,
                         const McContext& ctx, const RunLimits& limits = {});

// Survival weights P(N >= k) / E[N], k = 1..k_cap.
std::vector<double> delay_weights(const ThresholdRule& rule,
                                  const ObservationModel& model,
                                  std::uint64_t k_cap, std::uint64_t n_reps,
                                  const McContext& ctx,
                                  const RunLimits& limits = {});

// Stationary delay of the repeated-cycle procedure, measured directly: run
// multi-cyclically with the change at nu and average detection_epoch - nu.
// Callers should keep nu at least 10x the rule's mean cycle length so the
// cycle process is effectively stationary at nu.
Estimate stationary_add_direct(const ThresholdRule& rule,
                               const ObservationModel& model, std::uint64_t nu,
                               std::uint64_t n_reps, const McContext& ctx,
                               const RunLimits& limits = {});

// Ratio form of the same quantity.
double stationary_add_formula(const OperatingCharacteristics& oc);

// Distribution of nu - Q_{J-1}, the age of the running cycle at the
// changepoint. mass[k-1] estimates P(residual = k) for k = 1..nu.
struct ResidualTimeDist {
  std::vector<double> mass;
  std::uint64_t n_reps = 0;
};

ResidualTimeDist residual_time_dist(const ThresholdRule& rule,
                                    const ObservationModel& model,
                                    std::uint64_t nu, std::uint64_t n_reps,
                                    const McContext& ctx,
                                    const RunLimits& limits = {});

// Geometric changepoint prior: P(nu = k) = rho (1 - rho)^{k-1}, k >= 1.
struct GeometricPrior {
  double rho = 0.0;
};

struct LossSpec {
  double delay_cost = 0.0;  // c > 0, per unit of detection delay
  GeometricPrior prior;
};

// Bayes risk P(N < nu) + c E(N - nu)^+ with nu drawn from the prior each
// replication.
Estimate expected_loss(const ThresholdRule& rule, const ObservationModel& model,
                       const LossSpec& loss, std::uint64_t n_reps,
                       const McContext& ctx, const RunLimits& limits = {});

struct MixtureAddReport {
  Estimate mixture_add;            // stationary delay of the randomized procedure
  Estimate first_add;              // component stationary delays at the same nu
  Estimate second_add;
  double b1 = 0.0, b2 = 0.0;       // mean-cycle targets behind the two rules
  double predicted_add = 0.0;      // b1/(b1+b2) * first + b2/(b1+b2) * second
  double predicted_add_se = 0.0;
  double covering_first_freq = 0.0;  // fraction of covering cycles run by `first`
  double covering_first_se = 0.0;
  double predicted_first_freq = 0.0;  // b1 / (b1 + b2)
};

// Runs the cycle-level randomized procedure with the change at nu and checks
// its stationary delay against the convex combination of the component
// delays. b1 and b2 are the mean cycle lengths the two rules were built for.
MixtureAddReport mixture_add_experiment(const ThresholdRule& first, double b1,
                                        const ThresholdRule& second, double b2,
                                        const ObservationModel& model,
                                        std::uint64_t nu, std::uint64_t n_reps,
                                        const McContext& ctx,
                                        const RunLimits& limits = {});

struct RuleMetricsRow {
  std::string name;
  ThresholdRule rule;
  ArlEstimate arl;
  Estimate integral_add;
  Estimate stationary_add;
};

struct ComparisonReport {
  double target_arl = 0.0;
  std::vector<RuleMetricsRow> rows;
  std::vector<std::string> flags;  // any rule beating the sr baseline beyond noise
  std::string note;
};

// Side-by-side delay metrics for rules calibrated to the same mean time to
// false alarm. Throws ComparisonError when any calibration misses the target
// by more than rel_tol. All rows share ctx.seed (common random numbers).
ComparisonReport compare_rules(
    const std::vector<std::pair<std::string, CalibrationResult>>& rules,
    const ObservationModel& model, double target_arl, double rel_tol,
    std::uint64_t n_reps, const McContext& ctx, const RunLimits& limits = {});

// Largest conditional delay over k = 1..k_cap, skipping k whose acceptance
// rate fell below kAcceptanceFloor.
double sup_conditional_add(const ThresholdRule& rule,
                           const ObservationModel& model, std::uint64_t k_cap,
                           std::uint64_t n_reps, const McContext& ctx,
                           const RunLimits& limits = {});

}  // namespace seqdet
