#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "oracle_enumeration.hpp"
#include "seqdet/calibration.hpp"
#include "seqdet/errors.hpp"
#include "seqdet/metrics.hpp"
#include "seqdet/models.hpp"

using namespace seqdet;

namespace {
const ObservationModel kToy = ObservationModel::bernoulli(0.5, 0.75);
const ThresholdRule kToyRule{RuleKind::sr, 1.4, 0.0};

McContext ctx(std::uint64_t seed) {
  McContext c;
  c.seed = seed;
  return c;
}

double binom_se(double p, std::uint64_t n) {
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}
}  // namespace

TEST_CASE("operating characteristics reproduce the toy closed forms") {
  const OperatingCharacteristics oc =
      operating_characteristics(kToyRule, kToy, 0, 20000, ctx(101));

  CHECK(std::abs(oc.arl2fa.mean - oracle::kToyArl) <=
        4.0 * oc.arl2fa.std_err);
  CHECK(std::abs(oc.integral_add.value - oracle::kToyIntegralAdd) <=
        4.0 * oc.integral_add.std_err);
  CHECK(std::abs(oc.stationary_add.value - oracle::kToyStationaryAdd) <=
        4.0 * oc.stationary_add.std_err);
  CHECK(stationary_add_formula(oc) ==
        doctest::Approx(oc.stationary_add.value).epsilon(1e-12));

  CHECK(oc.horizon_ok);
  CHECK(oc.sum_horizon >= 16);
  REQUIRE(oc.survival.size() >= 6);
  for (std::uint64_t k = 1; k <= 6; ++k) {
    const double want = oracle::toy_survival(k);
    CHECK(std::abs(oc.survival[k - 1] - want) <=
          4.0 * binom_se(want, oc.arl2fa.n_reps) + 1e-12);
  }
  REQUIRE(oc.conditional_add.size() >= 4);
  for (std::uint64_t k = 1; k <= 4; ++k) {
    const Estimate& e = oc.conditional_add[k - 1];
    CHECK(std::abs(e.value - oracle::kToyConditionalAdd) <= 4.0 * e.std_err);
  }
  // weights are the survival estimates normalized by the mean run length
  REQUIRE(oc.weights.size() == oc.survival.size());
  for (std::size_t i = 0; i < oc.weights.size(); ++i)
    CHECK(oc.weights[i] ==
          doctest::Approx(oc.survival[i] / oc.arl2fa.mean).epsilon(1e-9));
  CHECK(oc.tail_bound >= 0.0);
  CHECK(oc.tail_bound < 0.05);
  CHECK(oc.sup_conditional_add > 0.1);
  CHECK(oc.sup_conditional_add < 0.8);
}

TEST_CASE("a short horizon loses exactly the mass the tail bound covers") {
  const OperatingCharacteristics oc =
      operating_characteristics(kToyRule, kToy, 5, 20000, ctx(103));
  CHECK(oc.sum_horizon == 5);
  // truncated sum: (1/3) * sum_{k<=5} (1/2)^{k-1} = 0.64583...
  const double truncated_sum = (2.0 / 3.0) * (1.0 - std::pow(0.5, 5));
  CHECK(std::abs(oc.integral_add.value - truncated_sum) <=
        4.0 * oc.integral_add.std_err);
  // the bound plus noise covers what was cut off
  CHECK(oracle::kToyIntegralAdd - oc.integral_add.value <=
        oc.tail_bound + 4.0 * oc.integral_add.std_err);
}

TEST_CASE("both integral-delay estimators agree with the closed form") {
  const Estimate cm = integral_add_cm(kToyRule, kToy, 20000, ctx(107));
  CHECK(std::abs(cm.value - oracle::kToyIntegralAdd) <= 4.0 * cm.std_err);

  const IntegralAddEstimate direct =
      integral_add_direct(kToyRule, kToy, 40, 20000, ctx(109));
  CHECK(std::abs(direct.total.value - oracle::kToyIntegralAdd) <=
        4.0 * direct.total.std_err);
  CHECK(direct.horizon == 40);
  CHECK(direct.tail_bound < 1e-6);
}

TEST_CASE("conditional delay by rejection sampling") {
  const Estimate e = conditional_add(kToyRule, kToy, 3, 20000, ctx(113));
  CHECK(std::abs(e.value - oracle::kToyConditionalAdd) <= 4.0 * e.std_err);
  CHECK(e.n_reps < 20000);  // rejections happened: acceptance is 1/4 at k=3

  // acceptance ~ 2^-24 at k = 25: must refuse, not return garbage
  CHECK_THROWS_AS((void)conditional_add(kToyRule, kToy, 25, 20000, ctx(113)),
                  EstimationError);
  CHECK_THROWS_AS((void)conditional_add(kToyRule, kToy, 0, 100, ctx(1)),
                  std::invalid_argument);
}

TEST_CASE("delay weights match the residual closed form") {
  const std::vector<double> w = delay_weights(kToyRule, kToy, 10, 20000, ctx(127));
  REQUIRE(w.size() == 10);
  // the weight is a ratio: both the survival numerator and the mean-run-length
  // denominator are noisy (the toy run length has variance exactly 2)
  const double arl_se = std::sqrt(2.0 / 20000.0);
  for (std::uint64_t k = 1; k <= 8; ++k) {
    const double s = oracle::toy_survival(k);
    const double se = binom_se(s, 20000) / oracle::kToyArl +
                      s * arl_se / (oracle::kToyArl * oracle::kToyArl);
    CHECK(std::abs(w[k - 1] - oracle::toy_residual_mass(k)) <= 4.0 * se);
  }
}

TEST_CASE("direct stationary delay at a late changepoint") {
  const Estimate direct =
      stationary_add_direct(kToyRule, kToy, 30, 10000, ctx(131));
  CHECK(std::abs(direct.value - oracle::kToyStationaryAdd) <=
        4.0 * direct.std_err);
  CHECK_THROWS_AS(
      (void)stationary_add_direct(kToyRule, kToy, 0, 100, ctx(1)),
      std::invalid_argument);
}

TEST_CASE("cycle-age distribution matches the renewal law") {
  const ResidualTimeDist resid =
      residual_time_dist(kToyRule, kToy, 25, 20000, ctx(137));
  REQUIRE(resid.mass.size() == 25);
  double total = 0.0;
  for (const double m : resid.mass) total += m;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  for (std::uint64_t k = 1; k <= 8; ++k) {
    const double want = oracle::toy_residual_mass(k);
    CHECK(std::abs(resid.mass[k - 1] - want) <=
          4.0 * binom_se(want, resid.n_reps) + 1e-12);
  }
}

TEST_CASE("expected loss under a geometric prior matches the closed form") {
  const double c = 0.01;
  const Estimate loss =
      expected_loss(kToyRule, kToy, LossSpec{c, {0.5}}, 40000, ctx(139));
  CHECK(std::abs(loss.value - oracle::toy_loss(c)) <= 4.0 * loss.std_err);

  CHECK_THROWS_AS((void)expected_loss(kToyRule, kToy, LossSpec{0.0, {0.5}},
                                      100, ctx(1)),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)expected_loss(kToyRule, kToy, LossSpec{1.0, {1.0}},
                                      100, ctx(1)),
                  std::invalid_argument);
}

TEST_CASE("symmetric mixture reduces to its components") {
  const MixtureAddReport mix = mixture_add_experiment(
      kToyRule, 2.0, kToyRule, 2.0, kToy, 40, 10000, ctx(149));
  CHECK(mix.predicted_first_freq == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mix.predicted_add ==
        doctest::Approx(0.5 * mix.first_add.value + 0.5 * mix.second_add.value)
            .epsilon(1e-12));
  CHECK(std::abs(mix.mixture_add.value - oracle::kToyStationaryAdd) <=
        4.0 * mix.mixture_add.std_err);
  CHECK(std::abs(mix.covering_first_freq - 0.5) <=
        4.0 * mix.covering_first_se);

  CHECK_THROWS_AS(
      (void)mixture_add_experiment(kToyRule, 2.0,
                                   ThresholdRule{RuleKind::cusum, 1.0, 0.0},
                                   2.0, kToy, 40, 100, ctx(1)),
      std::invalid_argument);
}

TEST_CASE("rule comparison shares streams and flags nothing for twins") {
  CalibrationSettings settings;
  settings.n_reps = 4000;
  const CalibrationResult cal =
      calibrate_threshold(RuleKind::sr, kToy, 2.0, settings, ctx(151));
  std::vector<std::pair<std::string, CalibrationResult>> rules = {
      {"sr", cal}, {"sr#2", cal}};
  const ComparisonReport report =
      compare_rules(rules, kToy, 2.0, 0.02, 10000, ctx(157));
  REQUIRE(report.rows.size() == 2);
  CHECK(report.target_arl == 2.0);
  CHECK_FALSE(report.note.empty());
  // identical rules under common random numbers give identical estimates
  CHECK(report.rows[0].integral_add.value == report.rows[1].integral_add.value);
  CHECK(report.flags.empty());

  // a calibration that missed the target is refused
  CalibrationResult off = cal;
  off.arl.mean = 5.0;
  std::vector<std::pair<std::string, CalibrationResult>> bad = {
      {"sr", cal}, {"off", off}};
  CHECK_THROWS_AS(
      (void)compare_rules(bad, kToy, 2.0, 0.02, 1000, ctx(157)),
      ComparisonError);
  CHECK_THROWS_AS((void)compare_rules({}, kToy, 2.0, 0.02, 1000, ctx(1)),
                  std::invalid_argument);
}

TEST_CASE("sup of the conditional delays sits near the flat toy profile") {
  const double sup = sup_conditional_add(kToyRule, kToy, 10, 10000, ctx(163));
  CHECK(sup > 0.15);
  CHECK(sup < 0.8);
}
