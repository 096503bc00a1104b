#include "seqdet/calibration.hpp"

#include <cmath>
#include <string>

#include "seqdet/errors.hpp"

namespace seqdet {

namespace {

// Censored estimate: truncated runs enter the mean at the cap value and are
// only counted, never rejected. Used by the bisection, where a saturated
// evaluation is still a perfectly good upper bracket (the censored mean is
// pathwise nondecreasing in the threshold under common random numbers).
ArlEstimate estimate_arl_censored(const ThresholdRule& rule,
                                  const ObservationModel& model,
                                  std::uint64_t n_reps, const McContext& ctx,
                                  const RunLimits& limits) {
  validate(rule);
  validate(model);
  if (n_reps < 2) throw std::invalid_argument("n_reps must be at least 2");
  const ChangeSpec no_change = ChangeSpec::never();
  MeanAcc acc = run_chunked<MeanAcc>(
      ctx, n_reps,
      [&](std::uint64_t begin, std::uint64_t end, MeanAcc& slot) {
        for (std::uint64_t rep = begin; rep < end; ++rep) {
          Engine eng = make_engine(ctx.seed, rep);
          const RunResult rr = run_to_alarm(rule, model, no_change, eng, limits);
          slot.add(static_cast<double>(rr.n));
          if (rr.truncated) ++slot.flagged;
        }
      });
  ArlEstimate est;
  est.mean = acc.mean();
  est.std_err = acc.std_err();
  est.n_reps = acc.n;
  est.truncated_fraction =
      static_cast<double>(acc.flagged) / static_cast<double>(acc.n);
  return est;
}

}  // namespace

ArlEstimate estimate_arl2fa(const ThresholdRule& rule,
                            const ObservationModel& model,
                            std::uint64_t n_reps, const McContext& ctx,
                            const RunLimits& limits) {
  const ArlEstimate est =
      estimate_arl_censored(rule, model, n_reps, ctx, limits);
  if (est.truncated_fraction > kTruncationTolerance) {
    throw CalibrationError(
        "mean run length unreliable: " +
        std::to_string(static_cast<std::uint64_t>(
            est.truncated_fraction * static_cast<double>(est.n_reps) + 0.5)) +
        " of " + std::to_string(est.n_reps) +
        " replications hit the step cap");
  }
  return est;
}

CalibrationResult calibrate_threshold(RuleKind kind,
                                      const ObservationModel& model,
                                      double target_arl,
                                      const CalibrationSettings& settings,
                                      const McContext& ctx, double rho) {
  validate(model);
  if (!std::isfinite(target_arl) || target_arl <= 1.0)
    throw CalibrationError("target mean run length must exceed 1");
  if (!(settings.rel_tol > 0.0) || settings.n_reps == 0)
    throw CalibrationError("calibration settings out of range");

  RunLimits limits;
  limits.step_cap = static_cast<std::uint64_t>(std::ceil(1000.0 * target_arl));

  auto make_rule = [&](double threshold) {
    ThresholdRule rule;
    rule.kind = kind;
    rule.threshold = threshold;
    rule.rho = kind == RuleKind::shiryaev ? rho : 0.0;
    return rule;
  };

  int evals = 0;
  // Every evaluation reuses ctx.seed: common random numbers make the
  // estimated curve exactly nondecreasing in the threshold. Estimates are
  // censored at the step cap so a wildly-high trial threshold (a cusum
  // threshold doubles the run length scale per unit, not per factor) still
  // returns a usable bracket value instead of failing.
  auto estimate = [&](double threshold) {
    ++evals;
    return estimate_arl_censored(make_rule(threshold), model, settings.n_reps,
                                 ctx, limits);
  };

  const double lo_target = target_arl * (1.0 - settings.rel_tol);
  const double hi_target = target_arl * (1.0 + settings.rel_tol);
  auto accept = [&](const ArlEstimate& est) {
    return est.mean >= lo_target && est.mean <= hi_target &&
           est.truncated_fraction <= kTruncationTolerance;
  };
  auto finish = [&](double threshold, const ArlEstimate& est) {
    if (est.truncated_fraction > kTruncationTolerance)
      throw CalibrationError(
          "accepted threshold still truncates too many runs");
    return CalibrationResult{make_rule(threshold), est, evals};
  };

  const bool hinted = settings.bracket_lo > 0.0 &&
                      settings.bracket_hi > settings.bracket_lo;
  double lo = hinted ? settings.bracket_lo : 1.0;
  ArlEstimate lo_est = estimate(lo);
  while (lo_est.mean > hi_target) {
    // The usual lower bracket sits above the target (small targets, strong
    // signals); extend downward before giving up.
    if (lo <= 1e-9)
      throw CalibrationError("no threshold attains the target mean run length");
    lo *= 0.5;
    lo_est = estimate(lo);
  }
  if (lo_est.mean >= lo_target) {
    // Already inside the tolerance band at the bracket floor.
    return finish(lo, lo_est);
  }

  double hi = hinted ? settings.bracket_hi : std::max(target_arl, 2.0 * lo);
  ArlEstimate hi_est = estimate(hi);
  while (hi_est.mean < target_arl) {
    if (hi > 1e300)
      throw CalibrationError("upper bracket diverged before reaching the target");
    hi *= 2.0;
    hi_est = estimate(hi);
  }
  if (accept(hi_est)) {
    return finish(hi, hi_est);
  }

  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const ArlEstimate mid_est = estimate(mid);
    if (accept(mid_est)) {
      return finish(mid, mid_est);
    }
    if (mid_est.mean < lo_est.mean || mid_est.mean > hi_est.mean) {
      throw CalibrationError("mean run length not monotone across the bracket");
    }
    if (mid_est.mean > target_arl) {
      hi = mid;
      hi_est = mid_est;
    } else {
      lo = mid;
      lo_est = mid_est;
    }
  }
  throw CalibrationError(
      "bisection exhausted without reaching the tolerance band (target " +
      std::to_string(target_arl) + ")");
}

}  // namespace seqdet
