#pragma once

#include <cstdint>

#include "seqdet/detectors.hpp"
#include "seqdet/mc.hpp"
#include "seqdet/models.hpp"

namespace seqdet {

// Monte Carlo estimate of the mean time to a false alarm E[N] under the
// no-change measure. truncated_fraction counts censored replications.
struct ArlEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::uint64_t n_reps = 0;
  double truncated_fraction = 0.0;
};

inline constexpr double kTruncationTolerance = 1e-3;

// Throws CalibrationError when more than kTruncationTolerance of the
// replications hit the step cap (the mean would be badly censored).
ArlEstimate estimate_arl2fa(const ThresholdRule& rule,
                            const ObservationModel& model,
                            std::uint64_t n_reps, const McContext& ctx,
                            const RunLimits& limits = {});

struct CalibrationSettings {
  double rel_tol = 0.02;
  std::uint64_t n_reps = 10'000;
  int max_iterations = 60;
  // Optional starting bracket for the threshold search, honoured when both
  // are positive and bracket_hi > bracket_lo; the search still extends the
  // bracket automatically when it fails to straddle the target. Seeding it
  // from a coarse calibration makes a high-replication refinement cheap: it
  // skips far-off-target trial thresholds, which for a cusum rule (run
  // length exponential in the threshold) saturate every run at the step cap.
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

struct CalibrationResult {
  ThresholdRule rule;
  ArlEstimate arl;     // estimate at the returned threshold
  int evaluations = 0; // ARL evaluations spent by the search
};

// Finds a threshold whose estimated mean time to false alarm lies within
// rel_tol * target_arl of target_arl, by bisection on the threshold. Every
// evaluation reuses ctx.seed, so all evaluations see the same observation
// streams and the estimated curve is monotone in the threshold pathwise;
// the search is deterministic given (model, target, settings, seed).
// rho applies to shiryaev rules only. Throws CalibrationError on failure.
CalibrationResult calibrate_threshold(RuleKind kind,
                                      const ObservationModel& model,
                                      double target_arl,
                                      const CalibrationSettings& settings,
                                      const McContext& ctx, double rho = 0.0);

}  // namespace seqdet
