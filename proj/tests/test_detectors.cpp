#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracle_enumeration.hpp"
#include "seqdet/detectors.hpp"
#include "seqdet/models.hpp"
#include "seqdet/rng.hpp"

using namespace seqdet;

TEST_CASE("sr update follows the add-one-then-scale recursion") {
  SrState st{2.0, 1};
  st = sr_update(st, 0.5);
  CHECK(st.r == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(st.n == 2);
  st = sr_update(st, 3.0);
  CHECK(st.r == doctest::Approx(7.5).epsilon(1e-15));
  CHECK(st.n == 3);
  CHECK_THROWS_AS((void)sr_update(st, 0.0), std::domain_error);
  CHECK_THROWS_AS((void)sr_update(st, -1.0), std::domain_error);
}

TEST_CASE("sr recursion equals the direct sum of products") {
  Engine eng = make_engine(7, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> lrs(1 + trial);
    for (double& v : lrs) v = std::exp(gauss(eng));
    const std::vector<double> want = oracle::sr_direct(lrs);
    SrState st;
    for (std::size_t i = 0; i < lrs.size(); ++i) {
      st = sr_update(st, lrs[i]);
      CHECK(st.r == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("discounted update and posterior") {
  ShiryaevState a{0.0, 0.5, 0};
  a = shiryaev_update(a, 1.0);
  CHECK(a.r_rho == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(shiryaev_posterior(a) == doctest::Approx(0.5).epsilon(1e-15));

  ShiryaevState b{0.0, 0.5, 0};
  b = shiryaev_update(b, 3.0);
  CHECK(b.r_rho == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(shiryaev_posterior(b) == doctest::Approx(0.75).epsilon(1e-15));

  // rho = 0 reduces to the plain recursion; its posterior is undefined
  ShiryaevState plain{0.0, 0.0, 0};
  SrState sr;
  Engine eng = make_engine(3, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < 25; ++i) {
    const double lr = std::exp(gauss(eng));
    plain = shiryaev_update(plain, lr);
    sr = sr_update(sr, lr);
    CHECK(plain.r_rho == doctest::Approx(sr.r).epsilon(1e-13));
  }
  CHECK_THROWS_AS((void)shiryaev_posterior(plain), std::domain_error);
}

TEST_CASE("cusum update reflects at zero") {
  CusumState st{1.0, 4};
  st = cusum_update(st, -0.5);
  CHECK(st.w == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(st.n == 5);
  st = cusum_update(st, 2.0);
  CHECK(st.w == doctest::Approx(2.5).epsilon(1e-15));
  st = cusum_update(st, -7.0);
  CHECK(st.w == 0.0);
}

TEST_CASE("rule kind names round-trip") {
  for (const RuleKind k : {RuleKind::sr, RuleKind::shiryaev, RuleKind::cusum})
    CHECK(rule_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS((void)rule_kind_from_string("page"), std::invalid_argument);
}

TEST_CASE("threshold rule validation and posterior level") {
  CHECK_NOTHROW(validate(ThresholdRule{RuleKind::sr, 1.4, 0.0}));
  CHECK_THROWS_AS(validate(ThresholdRule{RuleKind::sr, 0.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate(ThresholdRule{RuleKind::sr, 1.4, 0.3}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate(ThresholdRule{RuleKind::shiryaev, 2.0, 0.0}),
                  std::invalid_argument);
  CHECK_NOTHROW(validate(ThresholdRule{RuleKind::shiryaev, 2.0, 0.5}));

  const ThresholdRule shir{RuleKind::shiryaev, 2.0, 0.5};
  CHECK(shir.posterior_threshold() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS((void)ThresholdRule{}.posterior_threshold(),
                  std::logic_error);
}

TEST_CASE("stepper matches the statistic updates and the inclusive cutoff") {
  RuleStepper st(ThresholdRule{RuleKind::sr, 1.4, 0.0});
  CHECK_FALSE(st.wants_log());
  CHECK(st.state() == 0.0);
  CHECK(st.advance(1.5));  // 1.5 >= 1.4
  CHECK(st.state() == doctest::Approx(1.5).epsilon(1e-15));
  st.reset();
  CHECK_FALSE(st.advance(0.5));
  CHECK(st.state() == doctest::Approx(0.5).epsilon(1e-15));

  // exact hit counts as an alarm
  RuleStepper exact(ThresholdRule{RuleKind::sr, 2.0, 0.0});
  CHECK(exact.advance(2.0));

  RuleStepper cu(ThresholdRule{RuleKind::cusum, 5.0, 0.0});
  CHECK(cu.wants_log());
}

TEST_CASE("log-domain stepper agrees with the direct sums at a huge threshold") {
  const ThresholdRule rule{RuleKind::sr, 1e13, 0.0};
  RuleStepper st(rule);
  CHECK(st.wants_log());
  std::vector<double> lrs(80, 1.5);
  const std::vector<double> want = oracle::sr_direct(lrs);
  bool alarmed = false;
  for (std::size_t i = 0; i < lrs.size(); ++i) {
    const bool hit = st.advance(std::log(lrs[i]));
    CHECK(std::exp(st.state()) == doctest::Approx(want[i]).epsilon(1e-9));
    if (!alarmed && hit) {
      alarmed = true;
      CHECK(want[i] >= 1e13);
      if (i > 0) CHECK(want[i - 1] < 1e13);
    }
  }
  CHECK(alarmed);
}

TEST_CASE("single-run stopping over fixed ratio sequences") {
  const ThresholdRule rule{RuleKind::sr, 5.0, 0.0};
  const std::vector<double> twos(10, 2.0);
  const RunResult rr = run_to_alarm_lr(rule, twos);
  CHECK(rr.n == 2);  // statistic goes 2, then 6
  CHECK_FALSE(rr.truncated);

  const std::vector<double> halves(10, 0.5);
  RunLimits cap3;
  cap3.step_cap = 3;
  const RunResult capped = run_to_alarm_lr(rule, halves, cap3);
  CHECK(capped.n == 3);
  CHECK(capped.truncated);

  const std::vector<double> short_seq(1, 0.5);
  CHECK_THROWS_AS((void)run_to_alarm_lr(rule, short_seq),
                  std::invalid_argument);

  // cusum at level 5 with log-ratio log 2 per step crosses at step 8
  const ThresholdRule cu{RuleKind::cusum, 5.0, 0.0};
  const std::vector<double> twos20(20, 2.0);
  CHECK(run_to_alarm_lr(cu, twos20).n == 8);
}

TEST_CASE("model-driven run equals a hand-rolled stepper loop") {
  const ObservationModel m = ObservationModel::bernoulli(0.5, 0.75);
  const ThresholdRule rule{RuleKind::sr, 1.4, 0.0};
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    Engine a = make_engine(41, rep);
    const RunResult rr = run_to_alarm(rule, m, ChangeSpec::at(3), a);

    Engine b = make_engine(41, rep);
    ModelSampler sampler(m);
    RuleStepper st(rule);
    std::uint64_t n = 0;
    while (true) {
      ++n;
      const double x = sampler.draw(b, ChangeSpec::at(3), n);
      if (st.advance_obs(m, x)) break;
    }
    CHECK(rr.n == n);
    CHECK_FALSE(rr.truncated);
  }
}

TEST_CASE("repeated cycles over a fixed ratio sequence") {
  const ThresholdRule rule{RuleKind::sr, 5.0, 0.0};
  const std::vector<double> twos(40, 2.0);
  const MultiCyclicTrace t =
      multicyclic_run_lr(rule, twos, ChangeSpec::at(5));
  CHECK(t.cycle_lengths == std::vector<std::uint64_t>{2, 2, 2});
  CHECK(t.alarm_epochs == std::vector<std::uint64_t>{2, 4, 6});
  CHECK(t.j_nu == 3);
  CHECK(t.detection_epoch == 6);
  CHECK(t.nu == 5);
  CHECK_FALSE(t.truncated);

  MultiCyclicLimits four;
  four.max_cycles = 4;
  const MultiCyclicTrace inf =
      multicyclic_run_lr(rule, twos, ChangeSpec::never(), four);
  CHECK(inf.cycle_lengths.size() == 4);
  CHECK(inf.j_nu == 0);
  CHECK(inf.nu == 0);
  CHECK_FALSE(inf.truncated);
}

TEST_CASE("model-driven repeated cycles match a re-simulation") {
  const ObservationModel m = ObservationModel::bernoulli(0.5, 0.75);
  const ThresholdRule rule{RuleKind::sr, 1.4, 0.0};
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    for (const ChangeSpec change : {ChangeSpec::at(7), ChangeSpec::never()}) {
      MultiCyclicLimits limits;
      limits.max_cycles = 50;
      Engine a = make_engine(1234, rep);
      const MultiCyclicTrace t = multicyclic_run(rule, m, change, a, limits);

      Engine b = make_engine(1234, rep);
      ModelSampler sampler(m);
      RuleStepper st(rule);
      std::vector<std::uint64_t> lengths, epochs;
      std::uint64_t epoch = 0, cycle_len = 0;
      while (lengths.size() < limits.max_cycles) {
        ++epoch;
        ++cycle_len;
        const double x = sampler.draw(b, change, epoch);
        if (st.advance_obs(m, x)) {
          lengths.push_back(cycle_len);
          epochs.push_back(epoch);
          cycle_len = 0;
          st.reset();
          if (change.has_change() && epoch >= change.nu()) break;
        }
      }
      CHECK(t.cycle_lengths == lengths);
      CHECK(t.alarm_epochs == epochs);

      // structural invariants of the trace
      std::uint64_t sum = 0;
      for (std::size_t j = 0; j < t.cycle_lengths.size(); ++j) {
        sum += t.cycle_lengths[j];
        CHECK(t.alarm_epochs[j] == sum);
      }
      if (change.has_change()) {
        REQUIRE(t.j_nu >= 1);
        CHECK(t.detection_epoch == t.alarm_epochs[t.j_nu - 1]);
        CHECK(t.detection_epoch >= change.nu());
        if (t.j_nu > 1) CHECK(t.alarm_epochs[t.j_nu - 2] < change.nu());
      } else {
        CHECK(t.j_nu == 0);
      }
    }
  }
}

TEST_CASE("cycle budget truncation is reported") {
  const ObservationModel m = ObservationModel::bernoulli(0.5, 0.75);
  const ThresholdRule rule{RuleKind::sr, 1.4, 0.0};
  MultiCyclicLimits tight;
  tight.max_cycles = 2;
  Engine eng = make_engine(5, 0);
  // with only two cycles allowed the change at 10^6 is unreachable
  const MultiCyclicTrace t =
      multicyclic_run(rule, m, ChangeSpec::at(1'000'000), eng, tight);
  CHECK(t.truncated);
  CHECK(t.j_nu == 0);
}

TEST_CASE("randomized two-threshold cycles") {
  const ObservationModel m = ObservationModel::bernoulli(0.5, 0.75);
  const ThresholdRule toy{RuleKind::sr, 1.4, 0.0};
  CHECK_THROWS_AS(
      validate(MixtureRule{toy, ThresholdRule{RuleKind::cusum, 1.0, 0.0}}),
      std::invalid_argument);

  const MixtureRule mix{toy, ThresholdRule{RuleKind::sr, 2.9, 0.0}};
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    Engine a = make_engine(777, rep);
    const MixtureTrace t =
        mixture_multicyclic_run(mix, m, ChangeSpec::at(9), a);
    REQUIRE(t.base.j_nu >= 1);
    REQUIRE(t.cycle_types.size() == t.base.cycle_lengths.size());
    CHECK(t.covering_type == t.cycle_types[t.base.j_nu - 1]);

    // re-simulate: one fair coin at the start of every cycle, then the data
    Engine b = make_engine(777, rep);
    ModelSampler sampler(m);
    std::bernoulli_distribution coin(0.5);
    std::uint64_t epoch = 0;
    std::vector<std::uint64_t> lengths;
    std::vector<std::uint8_t> types;
    while (true) {
      const bool second = coin(b);
      types.push_back(second ? 1 : 0);
      RuleStepper st(second ? mix.second : mix.first);
      std::uint64_t len = 0;
      while (true) {
        ++epoch;
        ++len;
        if (st.advance_obs(m, sampler.draw(b, ChangeSpec::at(9), epoch)))
          break;
      }
      lengths.push_back(len);
      if (epoch >= 9) break;
    }
    CHECK(t.base.cycle_lengths == lengths);
    CHECK(t.cycle_types == types);
  }
}
