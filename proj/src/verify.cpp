#include "seqdet/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "seqdet/calibration.hpp"
#include "seqdet/detectors.hpp"
#include "seqdet/errors.hpp"
#include "seqdet/metrics.hpp"
#include "seqdet/models.hpp"
#include "seqdet/rng.hpp"

namespace seqdet {

namespace {

std::string sr6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double combined_se(double a, double b) { return std::sqrt(a * a + b * b); }

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double tv = 0.0;
  const std::size_t m = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < m; ++i) {
    const double x = i < a.size() ? a[i] : 0.0;
    const double y = i < b.size() ? b[i] : 0.0;
    tv += std::abs(x - y);
  }
  return 0.5 * tv;
}

double lag1_autocorr(const std::vector<std::uint64_t>& xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (const std::uint64_t x : xs) mean += static_cast<double>(x);
  mean /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(xs[i]) - mean;
    den += d * d;
    if (i + 1 < n)
      num += d * (static_cast<double>(xs[i + 1]) - mean);
  }
  return den == 0.0 ? 0.0 : num / den;
}

// All checks of one run, sharing a seed sequence (consumed in fixed program
// order) and reusable intermediate results.
class Runner {
 public:
  Runner(std::uint64_t seed, int threads)
      : seq_(seed), threads_(threads),
        toy_(ObservationModel::bernoulli(0.5, 0.75)),
        toy_rule_{RuleKind::sr, 1.4, 0.0},
        g1_(ObservationModel::gaussian_mean_shift(0.0, 1.0)),
        g05_(ObservationModel::gaussian_mean_shift(0.0, 0.5)),
        expm_(ObservationModel::exponential_rate(1.0, 2.0)) {}

  std::vector<CheckResult> take_checks() { return std::move(checks_); }

  void quick_phase(std::uint64_t seed_for_c9);
  void full_phase(std::uint64_t seed_for_c9);

 private:
  McContext next_ctx() {
    McContext ctx;
    ctx.seed = seq_.next();
    ctx.threads = threads_;
    return ctx;
  }
  void add(std::string id, bool pass, std::string detail) {
    checks_.push_back({std::move(id), pass, std::move(detail)});
  }
  void note_sr_calibration(double target, const CalibrationResult& cal) {
    sr_calibrations_.push_back({target, cal.rule.threshold});
  }

  // stopping time of the toy rule on an enumerated path; n+1 when censored
  int toy_stop_time(std::span<const double> path) const {
    SrState st;
    for (std::size_t i = 0; i < path.size(); ++i) {
      st = sr_update(st, likelihood_ratio(toy_, path[i]));
      if (st.r >= toy_rule_.threshold) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(path.size()) + 1;
  }

  void check_recursion_vs_direct_sum();
  void check_statistic_mean_is_n();
  void check_delay_identity_and_survival();
  void check_toy_monte_carlo();
  void check_discounted_to_plain_convergence();

  SeedSequence seq_;
  int threads_;
  std::vector<CheckResult> checks_;

  const ObservationModel toy_;
  const ThresholdRule toy_rule_;
  const ObservationModel g1_, g05_, expm_;
  const CalibrationSettings cal_settings_{};  // rel_tol 0.02, 10^4 reps

  std::vector<std::pair<double, double>> sr_calibrations_;  // (target, A)

  // quick artifacts reused by the full phase
  OperatingCharacteristics oc_toy_;
};

void Runner::check_recursion_vs_direct_sum() {
  Engine eng = make_engine(next_ctx().seed, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> len_dist(1, 30);
  double max_rel = 0.0;
  std::vector<double> lrs;
  for (int trial = 0; trial < 1000; ++trial) {
    const int len = len_dist(eng);
    lrs.resize(static_cast<std::size_t>(len));
    for (double& v : lrs) v = std::exp(gauss(eng));
    SrState st;
    for (int i = 0; i < len; ++i) {
      st = sr_update(st, lrs[static_cast<std::size_t>(i)]);
      double direct = 0.0;
      for (int k = 0; k <= i; ++k) {
        double prod = 1.0;
        for (int j = k; j <= i; ++j) prod *= lrs[static_cast<std::size_t>(j)];
        direct += prod;
      }
      max_rel = std::max(max_rel,
                         std::abs(st.r - direct) / std::max(1.0, direct));
    }
  }
  add("C1a", max_rel <= 1e-10,
      "recursion vs direct sum of products, max rel err " + sr6(max_rel));
}

void Runner::check_statistic_mean_is_n() {
  const int n = 12;
  std::vector<double> exp_r(n, 0.0);
  for_each_path(toy_, ChangeSpec::never(), n,
                [&](std::span<const double> path, double prob) {
                  SrState st;
                  for (int i = 0; i < n; ++i) {
                    st = sr_update(st,
                                   likelihood_ratio(toy_, path[static_cast<std::size_t>(i)]));
                    exp_r[static_cast<std::size_t>(i)] += prob * st.r;
                  }
                });
  double max_abs = 0.0;
  for (int i = 0; i < n; ++i)
    max_abs = std::max(max_abs, std::abs(exp_r[static_cast<std::size_t>(i)] -
                                         static_cast<double>(i + 1)));
  add("C1b", max_abs <= 1e-9,
      "no-change mean of the statistic vs n over " + std::to_string(n) +
          " steps, max abs err " + sr6(max_abs));
}

void Runner::check_delay_identity_and_survival() {
  const int n = 12;
  std::vector<double> surv_inf(n + 1, 0.0);  // index k: P(N >= k), no change
  for_each_path(toy_, ChangeSpec::never(), n,
                [&](std::span<const double> path, double prob) {
                  const int stop = toy_stop_time(path);
                  for (int k = 1; k <= n && k <= stop; ++k)
                    surv_inf[static_cast<std::size_t>(k)] += prob;
                });

  double max_surv_diff = 0.0;
  double max_identity_err = 0.0;
  for (int k = 1; k <= n; ++k) {
    double surv_k = 0.0, delay_mass = 0.0;
    for_each_path(toy_, ChangeSpec::at(static_cast<std::uint64_t>(k)), n,
                  [&](std::span<const double> path, double prob) {
                    const int stop = toy_stop_time(path);
                    if (stop >= k) {
                      surv_k += prob;
                      delay_mass += prob * static_cast<double>(stop - k);
                    }
                  });
    max_surv_diff = std::max(
        max_surv_diff, std::abs(surv_k - surv_inf[static_cast<std::size_t>(k)]));
    if (k <= 6) {
      // conditional delay times the no-change survival vs the plain
      // positive-part mean, both truncated identically at n
      const double lhs =
          (delay_mass / surv_k) * surv_inf[static_cast<std::size_t>(k)];
      const double rhs = delay_mass;
      max_identity_err =
          std::max(max_identity_err,
                   std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
  }
  add("C1c", max_identity_err <= 1e-12,
      "conditional-delay identity on enumerated paths, k <= 6, max rel err " +
          sr6(max_identity_err));
  add("INV-survival", max_surv_diff <= 1e-12,
      "pre-alarm survival agrees between change-at-k and no-change measures, "
      "max abs diff " +
          sr6(max_surv_diff));
}

void Runner::check_toy_monte_carlo() {
  oc_toy_ = operating_characteristics(toy_rule_, toy_, 0, 100000, next_ctx());
  {
    const double err = std::abs(oc_toy_.arl2fa.mean - 2.0);
    add("C1d-arl", err <= 4.0 * oc_toy_.arl2fa.std_err,
        "mean run length " + sr6(oc_toy_.arl2fa.mean) + " vs 2 (se " +
            sr6(oc_toy_.arl2fa.std_err) + ")");
  }
  {
    const double err = std::abs(oc_toy_.integral_add.value - 2.0 / 3.0);
    add("C1d-iadd", err <= 4.0 * oc_toy_.integral_add.std_err,
        "summed delay " + sr6(oc_toy_.integral_add.value) + " vs 2/3 (se " +
            sr6(oc_toy_.integral_add.std_err) + ")");
  }
  {
    const double err = std::abs(oc_toy_.stationary_add.value - 1.0 / 3.0);
    add("C1d-stadd", err <= 4.0 * oc_toy_.stationary_add.std_err,
        "stationary delay " + sr6(oc_toy_.stationary_add.value) +
            " vs 1/3 (se " + sr6(oc_toy_.stationary_add.std_err) + ")");
  }

  const ResidualTimeDist resid =
      residual_time_dist(toy_rule_, toy_, 20, 100000, next_ctx());
  bool resid_ok = true;
  double worst_z = 0.0;
  for (int k = 1; k <= 10; ++k) {
    const double p = std::pow(0.5, k - 1) / 2.0;
    const double se =
        std::sqrt(p * (1.0 - p) / static_cast<double>(resid.n_reps));
    const double z =
        std::abs(resid.mass[static_cast<std::size_t>(k - 1)] - p) / se;
    worst_z = std::max(worst_z, z);
    if (z > 4.0) resid_ok = false;
  }
  add("C1d-resid", resid_ok,
      "cycle-age masses vs (1/2)^k for k <= 10, worst z " + sr6(worst_z));

  const double tv = tv_distance(resid.mass, oc_toy_.weights);
  add("C4-toy", tv <= 0.02,
      "total-variation distance cycle-age vs normalized survival " + sr6(tv));
}

void Runner::check_discounted_to_plain_convergence() {
  Engine eng = make_engine(next_ctx().seed, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> lrs(50);
  for (double& v : lrs) v = std::exp(gauss(eng));
  SrState plain;
  for (const double lr : lrs) plain = sr_update(plain, lr);
  const double rhos[] = {1e-2, 1e-3, 1e-4};
  double diffs[3];
  for (int i = 0; i < 3; ++i) {
    ShiryaevState st{0.0, rhos[i], 0};
    for (const double lr : lrs) st = shiryaev_update(st, lr);
    diffs[i] = std::abs(st.r_rho - plain.r);
  }
  add("INV-shir2sr", diffs[1] < diffs[0] && diffs[2] < diffs[1],
      "discounted statistic approaches the plain one: gaps " + sr6(diffs[0]) +
          ", " + sr6(diffs[1]) + ", " + sr6(diffs[2]));
}

void Runner::quick_phase(std::uint64_t) {
  check_recursion_vs_direct_sum();
  check_statistic_mean_is_n();
  check_delay_identity_and_survival();
  check_toy_monte_carlo();
  check_discounted_to_plain_convergence();
}

void Runner::full_phase(std::uint64_t seed_for_c9) {
  const RunLimits limits;

  // -- sr vs cusum summed delay at matched mean run length ------------------
  // Coarse stage: both rules calibrated to B = 100 with the default band.
  // Tight stage: refine each threshold into a 0.2% band (well inside the
  // default 2% band) at 40x the evaluation replications, bracketing from the
  // coarse thresholds and sharing one stream set across the two refinements.
  // The refinement is what makes the comparison able to resolve its effect:
  // a 1% gap between the two realized mean run lengths moves the summed
  // delay by roughly the per-cycle delay times the run length (~6 here),
  // which would drown the difference the comparison is after.
  const McContext sr100_ctx = next_ctx();
  const McContext cu100_ctx = next_ctx();
  const CalibrationResult coarse_sr100 =
      calibrate_threshold(RuleKind::sr, g1_, 100.0, cal_settings_, sr100_ctx);
  const CalibrationResult coarse_cu100 = calibrate_threshold(
      RuleKind::cusum, g1_, 100.0, cal_settings_, cu100_ctx);
  CalibrationSettings tight = cal_settings_;
  tight.rel_tol = 0.002;
  tight.n_reps = 400'000;
  tight.bracket_lo = 0.8 * coarse_sr100.rule.threshold;
  tight.bracket_hi = 1.25 * coarse_sr100.rule.threshold;
  const CalibrationResult cal_sr100 =
      calibrate_threshold(RuleKind::sr, g1_, 100.0, tight, sr100_ctx);
  note_sr_calibration(100.0, cal_sr100);
  tight.bracket_lo = coarse_cu100.rule.threshold - 0.6;
  tight.bracket_hi = coarse_cu100.rule.threshold + 0.6;
  const CalibrationResult cal_cu100 = calibrate_threshold(
      RuleKind::cusum, g1_, 100.0, tight, sr100_ctx);
  const McContext pair_ctx = next_ctx();  // shared streams for the comparison
  const OperatingCharacteristics oc_sr100 =
      operating_characteristics(cal_sr100.rule, g1_, 0, 100000, pair_ctx);
  const OperatingCharacteristics oc_cu100 =
      operating_characteristics(cal_cu100.rule, g1_, 0, 100000, pair_ctx);
  {
    const double a = oc_sr100.integral_add.value;
    const double b = oc_cu100.integral_add.value;
    const double se = combined_se(oc_sr100.integral_add.std_err,
                                  oc_cu100.integral_add.std_err);
    add("C2", a <= b + 3.0 * se && a < b,
        "summed delay " + sr6(a) + " (sr) vs " + sr6(b) + " (cusum), gap " +
            sr6(b - a) + ", combined se " + sr6(se) + ", run lengths " +
            sr6(oc_sr100.arl2fa.mean) + "/" + sr6(oc_cu100.arl2fa.mean));
  }

  // -- stationary delay: direct vs ratio form -------------------------------
  const CalibrationResult cal_sr50 =
      calibrate_threshold(RuleKind::sr, g1_, 50.0, cal_settings_, next_ctx());
  note_sr_calibration(50.0, cal_sr50);
  const OperatingCharacteristics oc_sr50 =
      operating_characteristics(cal_sr50.rule, g1_, 0, 100000, next_ctx());
  const Estimate dir50 =
      stationary_add_direct(cal_sr50.rule, g1_, 500, 10000, next_ctx());
  const Estimate dir100 =
      stationary_add_direct(cal_sr100.rule, g1_, 1000, 10000, next_ctx());
  {
    const double se =
        combined_se(dir50.std_err, oc_sr50.stationary_add.std_err);
    const double gap = std::abs(dir50.value - oc_sr50.stationary_add.value);
    add("C3-B50", gap <= 2.0 * se,
        "direct " + sr6(dir50.value) + " vs ratio " +
            sr6(oc_sr50.stationary_add.value) + ", gap " + sr6(gap) +
            ", combined se " + sr6(se));
  }
  {
    const double se =
        combined_se(dir100.std_err, oc_sr100.stationary_add.std_err);
    const double gap = std::abs(dir100.value - oc_sr100.stationary_add.value);
    add("C3-B100", gap <= 2.0 * se,
        "direct " + sr6(dir100.value) + " vs ratio " +
            sr6(oc_sr100.stationary_add.value) + ", gap " + sr6(gap) +
            ", combined se " + sr6(se));
  }

  // -- renewal cycle-age law on the gaussian model --------------------------
  {
    const ResidualTimeDist resid =
        residual_time_dist(cal_sr50.rule, g1_, 500, 100000, next_ctx());
    const double tv = tv_distance(resid.mass, oc_sr50.weights);
    add("C4-gaussian", tv <= 0.05,
        "total-variation distance cycle-age vs normalized survival " +
            sr6(tv));
  }

  // -- small-rho limit of the expected loss ---------------------------------
  {
    const OperatingCharacteristics oc_big =
        operating_characteristics(toy_rule_, toy_, 0, 10000000, next_ctx());
    const double c_cost = 0.01;
    const double rhs =
        oc_big.arl2fa.mean - c_cost * oc_big.integral_add.value;
    const Estimate loss_hi = expected_loss(
        toy_rule_, toy_, LossSpec{c_cost, {1e-2}}, 30000000, next_ctx());
    const Estimate loss_lo = expected_loss(
        toy_rule_, toy_, LossSpec{c_cost, {1e-3}}, 300000000, next_ctx());
    const double d_hi = std::abs((1.0 / 1e-2) * (1.0 - loss_hi.value) - rhs);
    const double d_lo = std::abs((1.0 / 1e-3) * (1.0 - loss_lo.value) - rhs);
    add("C5", d_lo < d_hi,
        "scaled loss-vs-run-length gap shrinks: " + sr6(d_hi) +
            " at rho 1e-2, " + sr6(d_lo) + " at rho 1e-3");
  }

  // -- randomized two-threshold procedure -----------------------------------
  const CalibrationResult cal_sr150 =
      calibrate_threshold(RuleKind::sr, g1_, 150.0, cal_settings_, next_ctx());
  note_sr_calibration(150.0, cal_sr150);
  {
    const MixtureAddReport mix = mixture_add_experiment(
        cal_sr50.rule, 50.0, cal_sr150.rule, 150.0, g1_, 1000, 100000,
        next_ctx());
    const double se =
        combined_se(mix.mixture_add.std_err, mix.predicted_add_se);
    const double gap = std::abs(mix.mixture_add.value - mix.predicted_add);
    add("C6-add", gap <= 3.0 * se,
        "mixture delay " + sr6(mix.mixture_add.value) +
            " vs convex combination " + sr6(mix.predicted_add) + ", gap " +
            sr6(gap) + ", combined se " + sr6(se));
    const double fgap =
        std::abs(mix.covering_first_freq - mix.predicted_first_freq);
    add("C6-freq", fgap <= 3.0 * mix.covering_first_se,
        "covering-cycle frequency " + sr6(mix.covering_first_freq) + " vs " +
            sr6(mix.predicted_first_freq) + " (se " +
            sr6(mix.covering_first_se) + ")");
  }

  // -- two estimators of the summed delay on the default model matrix -------
  auto cross_check = [&](const std::string& id, const Estimate& direct,
                         const Estimate& cm) {
    const double se = combined_se(direct.std_err, cm.std_err);
    const double gap = std::abs(direct.value - cm.value);
    add(id, gap <= 3.0 * se,
        "direct " + sr6(direct.value) + " vs change-of-measure " +
            sr6(cm.value) + ", gap " + sr6(gap) + ", combined se " + sr6(se));
  };
  cross_check("C7-bernoulli", oc_toy_.integral_add,
              integral_add_cm(toy_rule_, toy_, 100000, next_ctx()));
  cross_check("C7-gaussian-1", oc_sr100.integral_add,
              integral_add_cm(cal_sr100.rule, g1_, 100000, next_ctx()));
  cross_check("C7-cusum", oc_cu100.integral_add,
              integral_add_cm(cal_cu100.rule, g1_, 100000, pair_ctx));
  const CalibrationResult cal_ex50 =
      calibrate_threshold(RuleKind::sr, expm_, 50.0, cal_settings_, next_ctx());
  note_sr_calibration(50.0, cal_ex50);
  const OperatingCharacteristics oc_ex50 =
      operating_characteristics(cal_ex50.rule, expm_, 0, 100000, next_ctx());
  cross_check("C7-exponential", oc_ex50.integral_add,
              integral_add_cm(cal_ex50.rule, expm_, 100000, next_ctx()));
  const CalibrationResult cal_g05_50 =
      calibrate_threshold(RuleKind::sr, g05_, 50.0, cal_settings_, next_ctx());
  note_sr_calibration(50.0, cal_g05_50);
  const OperatingCharacteristics oc_g05_50 =
      operating_characteristics(cal_g05_50.rule, g05_, 0, 100000, next_ctx());
  cross_check("C7-gaussian-05", oc_g05_50.integral_add,
              integral_add_cm(cal_g05_50.rule, g05_, 100000, next_ctx()));

  // -- ranking across the remaining model/target grid -----------------------
  auto rank_check = [&](const std::string& id,
                        const OperatingCharacteristics& sr_oc,
                        const OperatingCharacteristics& cu_oc) {
    const double ise = combined_se(sr_oc.integral_add.std_err,
                                   cu_oc.integral_add.std_err);
    const double sse = combined_se(sr_oc.stationary_add.std_err,
                                   cu_oc.stationary_add.std_err);
    const bool pass =
        sr_oc.integral_add.value <=
            cu_oc.integral_add.value + 3.0 * ise &&
        sr_oc.stationary_add.value <=
            cu_oc.stationary_add.value + 3.0 * sse;
    add(id, pass,
        "summed delay " + sr6(sr_oc.integral_add.value) + " vs " +
            sr6(cu_oc.integral_add.value) + ", stationary " +
            sr6(sr_oc.stationary_add.value) + " vs " +
            sr6(cu_oc.stationary_add.value));
  };
  const CalibrationResult cal_cu50 = calibrate_threshold(
      RuleKind::cusum, g1_, 50.0, cal_settings_, next_ctx());
  rank_check("INV-rank-g1-B50", oc_sr50,
             operating_characteristics(cal_cu50.rule, g1_, 0, 100000,
                                       next_ctx()));
  const CalibrationResult cal_g05_100 =
      calibrate_threshold(RuleKind::sr, g05_, 100.0, cal_settings_, next_ctx());
  note_sr_calibration(100.0, cal_g05_100);
  const OperatingCharacteristics oc_g05_100 = operating_characteristics(
      cal_g05_100.rule, g05_, 0, 100000, next_ctx());
  const CalibrationResult cal_cu05_50 = calibrate_threshold(
      RuleKind::cusum, g05_, 50.0, cal_settings_, next_ctx());
  rank_check("INV-rank-g05-B50", oc_g05_50,
             operating_characteristics(cal_cu05_50.rule, g05_, 0, 100000,
                                       next_ctx()));
  const CalibrationResult cal_cu05_100 = calibrate_threshold(
      RuleKind::cusum, g05_, 100.0, cal_settings_, next_ctx());
  rank_check("INV-rank-g05-B100", oc_g05_100,
             operating_characteristics(cal_cu05_100.rule, g05_, 0, 100000,
                                       next_ctx()));

  // -- stationary delay grows with the run-length target --------------------
  {
    const CalibrationResult cal_sr25 = calibrate_threshold(
        RuleKind::sr, g1_, 25.0, cal_settings_, next_ctx());
    note_sr_calibration(25.0, cal_sr25);
    const OperatingCharacteristics oc_sr25 = operating_characteristics(
        cal_sr25.rule, g1_, 0, 100000, next_ctx());
    const CalibrationResult cal_sr200 = calibrate_threshold(
        RuleKind::sr, g1_, 200.0, cal_settings_, next_ctx());
    note_sr_calibration(200.0, cal_sr200);
    const OperatingCharacteristics oc_sr200 = operating_characteristics(
        cal_sr200.rule, g1_, 0, 100000, next_ctx());
    const OperatingCharacteristics* grid[] = {&oc_sr25, &oc_sr50, &oc_sr100,
                                              &oc_sr200};
    bool pass = true;
    std::string vals;
    for (int i = 0; i < 4; ++i) {
      if (i > 0) {
        const double se =
            combined_se(grid[i - 1]->stationary_add.std_err,
                        grid[i]->stationary_add.std_err);
        if (grid[i - 1]->stationary_add.value >
            grid[i]->stationary_add.value + 3.0 * se)
          pass = false;
        vals += ", ";
      }
      vals += sr6(grid[i]->stationary_add.value);
    }
    add("INV-stadd-monotone", pass,
        "stationary delay over targets 25/50/100/200: " + vals);
  }

  // -- burn-in stability of the direct stationary estimate ------------------
  {
    const Estimate dir50b =
        stationary_add_direct(cal_sr50.rule, g1_, 1000, 10000, next_ctx());
    const double se = combined_se(dir50.std_err, dir50b.std_err);
    const double gap = std::abs(dir50.value - dir50b.value);
    add("INV-nu-stability", gap <= 3.0 * se,
        "doubling the changepoint moves the estimate by " + sr6(gap) +
            " (combined se " + sr6(se) + ")");
  }

  // -- repeated cycles are independent --------------------------------------
  {
    Engine eng = make_engine(next_ctx().seed, 0);
    MultiCyclicLimits mlimits;
    mlimits.max_cycles = 10000;
    const MultiCyclicTrace trace = multicyclic_run(
        toy_rule_, toy_, ChangeSpec::never(), eng, mlimits);
    const double r = lag1_autocorr(trace.cycle_lengths);
    const double bound =
        4.0 / std::sqrt(static_cast<double>(trace.cycle_lengths.size()));
    add("INV-cycle-iid", std::abs(r) <= bound,
        "lag-1 autocorrelation of cycle lengths " + sr6(r) + " (bound " +
            sr6(bound) + ")");
  }

  // -- discounted-rule calibration round trip -------------------------------
  {
    const CalibrationResult cal_shir = calibrate_threshold(
        RuleKind::shiryaev, toy_, 20.0, cal_settings_, next_ctx(), 0.01);
    const double post = cal_shir.rule.posterior_threshold();
    const double band = cal_settings_.rel_tol * 20.0;
    add("INV-shiryaev-cal",
        post > 0.0 && post < 1.0 &&
            std::abs(cal_shir.arl.mean - 20.0) <= band,
        "mean run length " + sr6(cal_shir.arl.mean) +
            " at posterior level " + sr6(post));
  }

  // -- lower bound and calibration bound on thresholds ----------------------
  {
    struct FamilyCase {
      const char* name;
      const ObservationModel* model;
    };
    const FamilyCase cases[] = {
        {"bernoulli", &toy_}, {"gaussian", &g1_}, {"exponential", &expm_}};
    for (const FamilyCase& fc : cases) {
      double worst_margin = std::numeric_limits<double>::infinity();
      bool pass = true;
      for (const double a : {2.0, 10.0, 50.0}) {
        const ThresholdRule rule{RuleKind::sr, a, 0.0};
        const ArlEstimate est =
            estimate_arl2fa(rule, *fc.model, 10000, next_ctx());
        const double margin = est.mean - (a - 3.0 * est.std_err);
        worst_margin = std::min(worst_margin, margin);
        if (margin < 0.0) pass = false;
      }
      add(std::string("C8-bound-") + fc.name, pass,
          "mean run length at least the threshold across levels 2/10/50, "
          "worst margin " +
              sr6(worst_margin));
    }
    const CalibrationResult cal_toy2 =
        calibrate_threshold(RuleKind::sr, toy_, 2.0, cal_settings_, next_ctx());
    note_sr_calibration(2.0, cal_toy2);
    bool pass = true;
    double worst_ratio = 0.0;
    for (const auto& [target, threshold] : sr_calibrations_) {
      const double ratio = threshold / (target * (1.0 + cal_settings_.rel_tol));
      worst_ratio = std::max(worst_ratio, ratio);
      if (ratio > 1.0) pass = false;
    }
    add("C8-threshold", pass,
        "every calibrated threshold stays below its target band, worst "
        "threshold/bound ratio " +
            sr6(worst_ratio) + " over " +
            std::to_string(sr_calibrations_.size()) + " calibrations");
  }

  // -- byte-level determinism of the quick report ---------------------------
  {
    const std::string a =
        format_verify_report(run_verify(VerifyProfile::quick, seed_for_c9, 1));
    const std::string b =
        format_verify_report(run_verify(VerifyProfile::quick, seed_for_c9, 1));
    const std::string c =
        format_verify_report(run_verify(VerifyProfile::quick, seed_for_c9, 4));
    const std::string d =
        format_verify_report(run_verify(VerifyProfile::quick, seed_for_c9, 4));
    add("C9", a == b && b == c && c == d,
        "quick reports are byte-identical across repeats and 1 vs 4 threads");
  }
  (void)limits;
}

}  // namespace

VerifyProfile verify_profile_from_string(const std::string& s) {
  if (s == "quick") return VerifyProfile::quick;
  if (s == "full") return VerifyProfile::full;
  throw std::invalid_argument("unknown profile: " + s);
}

std::string to_string(VerifyProfile profile) {
  return profile == VerifyProfile::quick ? "quick" : "full";
}

bool VerifyReport::all_pass() const {
  for (const CheckResult& c : checks)
    if (!c.pass) return false;
  return true;
}

VerifyReport run_verify(VerifyProfile profile, std::uint64_t seed,
                        unsigned threads) {
  Runner runner(seed, static_cast<int>(threads));
  runner.quick_phase(seed);
  if (profile == VerifyProfile::full) runner.full_phase(seed);
  VerifyReport report;
  report.profile = profile;
  report.seed = seed;
  report.checks = runner.take_checks();
  return report;
}

std::string format_verify_report(const VerifyReport& report) {
  std::string out = "verify profile=" + to_string(report.profile) +
                    " seed=" + std::to_string(report.seed) + "\n";
  std::size_t passed = 0;
  for (const CheckResult& c : report.checks) {
    out += (c.pass ? "PASS " : "FAIL ");
    out += c.id;
    out += ' ';
    out += c.detail;
    out += '\n';
    if (c.pass) ++passed;
  }
  out += "RESULT ";
  out += (passed == report.checks.size() ? "PASS" : "FAIL");
  out += ' ';
  out += std::to_string(passed);
  out += '/';
  out += std::to_string(report.checks.size());
  out += '\n';
  return out;
}

}  // namespace seqdet
