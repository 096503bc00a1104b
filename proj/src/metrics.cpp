#include "seqdet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>

#include "seqdet/errors.hpp"
#include "seqdet/rng.hpp"

namespace seqdet {

namespace {

double sample_variance(double sum, double sum_sq, std::uint64_t n) {
  if (n < 2) return 0.0;
  const double mean = sum / static_cast<double>(n);
  const double v =
      (sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
  return v > 0.0 ? v : 0.0;
}

double std_err_of(double sum, double sum_sq, std::uint64_t n) {
  return n == 0 ? 0.0
               : std::sqrt(sample_variance(sum, sum_sq, n) / static_cast<double>(n));
}

void check_step_cap(const RunLimits& limits) {
  if (limits.step_cap == 0) throw std::invalid_argument("step cap must be positive");
}

void check_censoring(std::uint64_t flagged, std::uint64_t n, const char* what) {
  if (n > 0 &&
      static_cast<double>(flagged) > kTruncationTolerance * static_cast<double>(n)) {
    throw EstimationError(std::string(what) + ": " + std::to_string(flagged) +
                          " of " + std::to_string(n) +
                          " replications hit the step cap");
  }
}

double model_lr_value(const ObservationModel& model, double x, bool want_log) {
  return want_log ? log_likelihood_ratio(model, x) : likelihood_ratio(model, x);
}

// --- coupled sweep ---------------------------------------------------------
//
// One no-change trajectory per replication, statistic states recorded along
// it; every changepoint k the trajectory survived past is then continued from
// the stored state with post-change draws. Each k's delay estimate is an
// ordinary change-at-k simulation (the event {N >= k} only depends on the
// first k-1 observations), and per-replication delay totals give the standard
// error of the sum over k.

struct SweepAcc {
  std::vector<double> delay_sum, delay_sq;
  std::vector<std::uint64_t> n_hist;  // size k_cap + 2; last bin: runs with N > k_cap
  double overflow_excess = 0.0;       // sum of N - k_cap over last-bin runs
  double sum_total = 0.0, sum_total_sq = 0.0;
  double sum_n = 0.0, sum_n_sq = 0.0, sum_cross = 0.0;
  std::uint64_t truncated = 0, cont_truncated = 0, n = 0;

  void init(std::size_t k_cap) {
    delay_sum.assign(k_cap, 0.0);
    delay_sq.assign(k_cap, 0.0);
    n_hist.assign(k_cap + 2, 0);
  }
  bool empty() const { return n_hist.empty(); }
  void merge(const SweepAcc& o) {
    if (o.empty()) return;
    if (empty()) {
      *this = o;
      return;
    }
    for (std::size_t i = 0; i < delay_sum.size(); ++i) {
      delay_sum[i] += o.delay_sum[i];
      delay_sq[i] += o.delay_sq[i];
    }
    for (std::size_t i = 0; i < n_hist.size(); ++i) n_hist[i] += o.n_hist[i];
    overflow_excess += o.overflow_excess;
    sum_total += o.sum_total;
    sum_total_sq += o.sum_total_sq;
    sum_n += o.sum_n;
    sum_n_sq += o.sum_n_sq;
    sum_cross += o.sum_cross;
    truncated += o.truncated;
    cont_truncated += o.cont_truncated;
    n += o.n;
  }
};

SweepAcc run_sweep(const ThresholdRule& rule, const ObservationModel& model,
                   std::uint64_t k_cap, std::uint64_t n_reps,
                   const McContext& ctx, const RunLimits& limits) {
  validate(rule);
  validate(model);
  check_step_cap(limits);
  if (k_cap == 0) throw std::invalid_argument("horizon must be positive");
  if (n_reps == 0) throw std::invalid_argument("n_reps must be positive");
  return run_chunked<SweepAcc>(
      ctx, n_reps, [&](std::uint64_t begin, std::uint64_t end, SweepAcc& slot) {
        slot.init(static_cast<std::size_t>(k_cap));
        RuleStepper st(rule);
        const bool want_log = st.wants_log();
        std::vector<double> prefix;
        for (std::uint64_t rep = begin; rep < end; ++rep) {
          Engine eng = make_engine(ctx.seed, rep);
          ModelSampler sampler(model);
          st.reset();
          prefix.clear();
          std::uint64_t n = 0;
          bool truncated = false;
          for (;;) {
            if (n >= limits.step_cap) {
              truncated = true;
              break;
            }
            if (n < k_cap) prefix.push_back(st.state());
            const double x = sampler.draw_pre(eng);
            ++n;
            if (st.advance(model_lr_value(model, x, want_log))) break;
          }
          if (truncated) ++slot.truncated;
          double total = 0.0;
          const std::uint64_t k_max = std::min(n, k_cap);
          for (std::uint64_t k = 1; k <= k_max; ++k) {
            st.set_state(prefix[k - 1]);
            std::uint64_t extra = 0;
            for (;;) {
              if (extra >= limits.step_cap) {
                ++slot.cont_truncated;
                break;
              }
              const double x = sampler.draw_post(eng);
              ++extra;
              if (st.advance(model_lr_value(model, x, want_log))) break;
            }
            const double d = static_cast<double>(extra - 1);
            slot.delay_sum[k - 1] += d;
            slot.delay_sq[k - 1] += d * d;
            total += d;
          }
          const double nd = static_cast<double>(n);
          slot.sum_total += total;
          slot.sum_total_sq += total * total;
          slot.sum_n += nd;
          slot.sum_n_sq += nd * nd;
          slot.sum_cross += total * nd;
          if (n > k_cap) {
            ++slot.n_hist[k_cap + 1];
            slot.overflow_excess += static_cast<double>(n - k_cap);
          } else {
            ++slot.n_hist[n];
          }
          ++slot.n;
        }
      });
}

OperatingCharacteristics summarize_sweep(const SweepAcc& acc,
                                         std::uint64_t k_cap) {
  const std::uint64_t n = acc.n;
  OperatingCharacteristics oc;
  oc.arl2fa.mean = acc.sum_n / static_cast<double>(n);
  oc.arl2fa.std_err = std_err_of(acc.sum_n, acc.sum_n_sq, n);
  oc.arl2fa.n_reps = n;
  oc.arl2fa.truncated_fraction =
      static_cast<double>(acc.truncated) / static_cast<double>(n);

  // Survival counts #{N >= k} by suffix-summing the run-length histogram.
  std::vector<std::uint64_t> count_ge(static_cast<std::size_t>(k_cap) + 2, 0);
  count_ge[k_cap + 1] = acc.n_hist[k_cap + 1];
  for (std::uint64_t k = k_cap; k >= 1; --k)
    count_ge[k] = count_ge[k + 1] + acc.n_hist[k];

  const std::uint64_t min_count = std::max<std::uint64_t>(
      2, static_cast<std::uint64_t>(
             std::ceil(kAcceptanceFloor * static_cast<double>(n))));
  double c_tail = 0.0;
  for (std::uint64_t k = 1; k <= k_cap; ++k) {
    if (count_ge[k] >= min_count)
      c_tail = std::max(c_tail, acc.delay_sum[k - 1] /
                                    static_cast<double>(count_ge[k]));
  }
  oc.sup_conditional_add = c_tail;
  oc.tail_bound = c_tail * acc.overflow_excess / static_cast<double>(n);
  oc.sum_horizon = k_cap;

  oc.horizon = k_cap;
  oc.horizon_ok = false;
  for (std::uint64_t k = 1; k <= k_cap; ++k) {
    if (static_cast<double>(count_ge[k]) <
        kSurvivalFloor * static_cast<double>(n)) {
      oc.horizon = k;
      oc.horizon_ok = true;
      break;
    }
  }

  oc.survival.reserve(oc.horizon);
  oc.conditional_add.reserve(oc.horizon);
  oc.weights.reserve(oc.horizon);
  for (std::uint64_t k = 1; k <= oc.horizon; ++k) {
    const std::uint64_t count = count_ge[k];
    oc.survival.push_back(static_cast<double>(count) / static_cast<double>(n));
    Estimate cond;
    cond.n_reps = count;
    if (count > 0) {
      cond.value = acc.delay_sum[k - 1] / static_cast<double>(count);
      cond.std_err = std_err_of(acc.delay_sum[k - 1], acc.delay_sq[k - 1], count);
    }
    oc.conditional_add.push_back(cond);
    oc.weights.push_back(static_cast<double>(count) / acc.sum_n);
  }

  oc.integral_add.value = acc.sum_total / static_cast<double>(n);
  oc.integral_add.std_err = std_err_of(acc.sum_total, acc.sum_total_sq, n);
  oc.integral_add.n_reps = n;

  // Delta-method error for the ratio of the two per-replication means.
  const double mu_s = acc.sum_total / static_cast<double>(n);
  const double mu_n = acc.sum_n / static_cast<double>(n);
  const double var_s = sample_variance(acc.sum_total, acc.sum_total_sq, n);
  const double var_n = sample_variance(acc.sum_n, acc.sum_n_sq, n);
  double cov = 0.0;
  if (n >= 2) {
    cov = (acc.sum_cross - static_cast<double>(n) * mu_s * mu_n) /
          static_cast<double>(n - 1);
  }
  const double ratio = mu_s / mu_n;
  const double var_ratio =
      (var_s + ratio * ratio * var_n - 2.0 * ratio * cov) / (mu_n * mu_n);
  oc.stationary_add.value = ratio;
  oc.stationary_add.std_err =
      std::sqrt(std::max(0.0, var_ratio) / static_cast<double>(n));
  oc.stationary_add.n_reps = n;
  return oc;
}

void check_sweep_censoring(const SweepAcc& acc) {
  if (static_cast<double>(acc.truncated) >
      kTruncationTolerance * static_cast<double>(acc.n))
    throw CalibrationError("no-change runs unreliable: " +
                           std::to_string(acc.truncated) + " of " +
                           std::to_string(acc.n) + " hit the step cap");
  check_censoring(acc.cont_truncated, acc.n, "post-change continuations");
}

// --- repeated-cycle delay kernel -------------------------------------------

struct CycleOutcome {
  std::uint64_t residual = 0;  // nu - Q_{J-1}, in 1..nu
  std::uint64_t delay = 0;     // Q_J - nu
  bool truncated = false;
};

CycleOutcome run_cycle_delay(RuleStepper& st, const ObservationModel& model,
                             ModelSampler& sampler, Engine& eng,
                             std::uint64_t nu, std::uint64_t epoch_cap,
                             bool want_log) {
  std::uint64_t epoch = 0, q_prev = 0;
  for (;;) {
    st.reset();
    for (;;) {
      if (epoch >= epoch_cap) return {0, 0, true};
      const double x =
          epoch + 1 >= nu ? sampler.draw_post(eng) : sampler.draw_pre(eng);
      ++epoch;
      if (st.advance(model_lr_value(model, x, want_log))) break;
    }
    if (epoch >= nu) return {nu - q_prev, epoch - nu, false};
    q_prev = epoch;
  }
}

}  // namespace

OperatingCharacteristics operating_characteristics(
    const ThresholdRule& rule, const ObservationModel& model,
    std::uint64_t k_request, std::uint64_t n_reps, const McContext& ctx,
    const RunLimits& limits) {
  std::uint64_t k_cap = k_request;
  if (k_cap == 0) {
    // Pilot sizes the sweep so the auto horizon lands inside it: survival
    // decays roughly geometrically with mean ~ARL, so 12 ARLs is beyond the
    // 1e-4 survival point with a comfortable margin.
    const std::uint64_t pilot_reps = std::min<std::uint64_t>(n_reps, 2000);
    const ArlEstimate pilot =
        estimate_arl2fa(rule, model, pilot_reps, ctx, limits);
    k_cap = std::max<std::uint64_t>(
        64, static_cast<std::uint64_t>(std::ceil(12.0 * pilot.mean)));
  }
  const SweepAcc acc = run_sweep(rule, model, k_cap, n_reps, ctx, limits);
  check_sweep_censoring(acc);
  return summarize_sweep(acc, k_cap);
}

Estimate conditional_add(const ThresholdRule& rule,
                         const ObservationModel& model, std::uint64_t k,
                         std::uint64_t n_reps, const McContext& ctx,
                         const RunLimits& limits) {
  validate(rule);
  validate(model);
  check_step_cap(limits);
  if (k == 0) throw std::invalid_argument("changepoint index must be >= 1");
  if (n_reps == 0) throw std::invalid_argument("n_reps must be positive");
  struct CondAcc {
    MeanAcc accepted;
    std::uint64_t total = 0;
    void merge(const CondAcc& o) {
      accepted.merge(o.accepted);
      total += o.total;
    }
  };
  const ChangeSpec change = ChangeSpec::at(k);
  const CondAcc acc = run_chunked<CondAcc>(
      ctx, n_reps, [&](std::uint64_t begin, std::uint64_t end, CondAcc& slot) {
        for (std::uint64_t rep = begin; rep < end; ++rep) {
          Engine eng = make_engine(ctx.seed, rep);
          const RunResult rr = run_to_alarm(rule, model, change, eng, limits);
          ++slot.total;
          if (rr.truncated) {
            ++slot.accepted.flagged;
          } else if (rr.n >= k) {
            slot.accepted.add(static_cast<double>(rr.n - k));
          }
        }
      });
  check_censoring(acc.accepted.flagged, acc.total, "conditional delay runs");
  const double acceptance =
      static_cast<double>(acc.accepted.n) / static_cast<double>(acc.total);
  if (acc.accepted.n < 2 || acceptance < kAcceptanceFloor) {
    throw EstimationError(
        "changepoint " + std::to_string(k) +
        " is too large for rejection sampling: acceptance rate " +
        std::to_string(acceptance));
  }
  return {acc.accepted.mean(), acc.accepted.std_err(), acc.accepted.n};
}

IntegralAddEstimate integral_add_direct(const ThresholdRule& rule,
                                        const ObservationModel& model,
                                        std::uint64_t k_cap,
                                        std::uint64_t n_reps,
                                        const McContext& ctx,
                                        const RunLimits& limits) {
  const SweepAcc acc = run_sweep(rule, model, k_cap, n_reps, ctx, limits);
  check_sweep_censoring(acc);
  const OperatingCharacteristics oc = summarize_sweep(acc, k_cap);
  return {oc.integral_add, oc.tail_bound, k_cap};
}

Estimate integral_add_cm(const ThresholdRule& rule,
                         const ObservationModel& model, std::uint64_t n_reps,
                         const McContext& ctx, const RunLimits& limits) {
  validate(rule);
  validate(model);
  check_step_cap(limits);
  if (n_reps == 0) throw std::invalid_argument("n_reps must be positive");
  const MeanAcc acc = run_chunked<MeanAcc>(
      ctx, n_reps, [&](std::uint64_t begin, std::uint64_t end, MeanAcc& slot) {
        RuleStepper st(rule);
        const bool want_log = st.wants_log();
        for (std::uint64_t rep = begin; rep < end; ++rep) {
          Engine eng = make_engine(ctx.seed, rep);
          ModelSampler sampler(model);
          st.reset();
          SrState r;
          double running = 0.0;
          for (std::uint64_t n = 0;;) {
            if (n >= limits.step_cap) {
              ++slot.flagged;
              break;
            }
            const double x = sampler.draw_pre(eng);
            ++n;
            const double lr = likelihood_ratio(model, x);
            const bool alarm =
                st.advance(want_log ? log_likelihood_ratio(model, x) : lr);
            r = sr_update(r, lr);
            if (alarm) break;
            running += r.r;
          }
          slot.add(running);
        }
      });
  check_censoring(acc.flagged, acc.n, "change-of-measure runs");
  return {acc.mean(), acc.std_err(), acc.n};
}

std::vector<double> delay_weights(const ThresholdRule& rule,
                                  const ObservationModel& model,
                                  std::uint64_t k_cap, std::uint64_t n_reps,
                                  const McContext& ctx,
                                  const RunLimits& limits) {
  const SweepAcc acc = run_sweep(rule, model, k_cap, n_reps, ctx, limits);
  check_sweep_censoring(acc);
  std::vector<std::uint64_t> count_ge(static_cast<std::size_t>(k_cap) + 2, 0);
  count_ge[k_cap + 1] = acc.n_hist[k_cap + 1];
  for (std::uint64_t k = k_cap; k >= 1; --k)
    count_ge[k] = count_ge[k + 1] + acc.n_hist[k];
  std::vector<double> w(static_cast<std::size_t>(k_cap));
  for (std::uint64_t k = 1; k <= k_cap; ++k)
    w[k - 1] = static_cast<double>(count_ge[k]) / acc.sum_n;
  return w;
}

Estimate stationary_add_direct(const ThresholdRule& rule,
                               const ObservationModel& model, std::uint64_t nu,
                               std::uint64_t n_reps, const McContext& ctx,
                               const RunLimits& limits) {
  validate(rule);
  validate(model);
  check_step_cap(limits);
  if (nu == 0) throw std::invalid_argument("changepoint index must be >= 1");
  if (n_reps == 0) throw std::invalid_argument("n_reps must be positive");
  const std::uint64_t epoch_cap = nu + limits.step_cap;
  const MeanAcc acc = run_chunked<MeanAcc>(
      ctx, n_reps, [&](std::uint64_t begin, std::uint64_t end, MeanAcc& slot) {
        RuleStepper st(rule);
        const bool want_log = st.wants_log();
        for (std::uint64_t rep = begin; rep < end; ++rep) {
          Engine eng = make_engine(ctx.seed, rep);
          ModelSampler sampler(model);
          const CycleOutcome out =
              run_cycle_delay(st, model, sampler, eng, nu, epoch_cap, want_log);
          if (out.truncated) {
            ++slot.flagged;
          } else {
            slot.add(static_cast<double>(out.delay));
          }
        }
      });
  check_censoring(acc.flagged, acc.n + acc.flagged, "repeated-cycle runs");
  return {acc.mean(), acc.std_err(), acc.n};
}

double stationary_add_formula(const OperatingCharacteristics& oc) {
  return oc.integral_add.value / oc.arl2fa.mean;
}

ResidualTimeDist residual_time_dist(const ThresholdRule& rule,
                                    const ObservationModel& model,
                                    std::uint64_t nu, std::uint64_t n_reps,
                                    const McContext& ctx,
                                    const RunLimits& limits) {
  validate(rule);
  validate(model);
  check_step_cap(limits);
  if (nu == 0) throw std::invalid_argument("changepoint index must be >= 1");
  if (n_reps == 0) throw std::invalid_argument("n_reps must be positive");
  struct HistAcc {
    std::vector<std::uint64_t> counts;
    std::uint64_t flagged = 0, n = 0;
    void merge(const HistAcc& o) {
      if (o.counts.empty()) return;
      if (counts.empty()) {
        *this = o;
        return;
      }
      for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
      flagged += o.flagged;
      n += o.n;
    }
  };
  // Keep the per-chunk histograms inside a fixed memory budget; the chunk
  // size is a function of (n_reps, nu) only, never of the thread count.
  McContext local = ctx;
  const std::uint64_t max_slots =
      std::max<std::uint64_t>(1, (std::uint64_t{1} << 28) / (8 * nu));
  local.chunk = std::max(local.chunk, (n_reps + max_slots - 1) / max_slots);
  const std::uint64_t epoch_cap = nu + limits.step_cap;
  const HistAcc acc = run_chunked<HistAcc>(
      local, n_reps, [&](std::uint64_t begin, std::uint64_t end, HistAcc& slot) {
        slot.counts.assign(static_cast<std::size_t>(nu), 0);
        RuleStepper st(rule);
        const bool want_log = st.wants_log();
        for (std::uint64_t rep = begin; rep < end; ++rep) {
          Engine eng = make_engine(local.seed, rep);
          ModelSampler sampler(model);
          const CycleOutcome out =
              run_cycle_delay(st, model, sampler, eng, nu, epoch_cap, want_log);
          if (out.truncated) {
            ++slot.flagged;
          } else {
            ++slot.counts[out.residual - 1];
            ++slot.n;
          }
        }
      });
  check_censoring(acc.flagged, acc.n + acc.flagged, "repeated-cycle runs");
  ResidualTimeDist dist;
  dist.n_reps = acc.n;
  dist.mass.resize(acc.counts.size());
  for (std::size_t i = 0; i < acc.counts.size(); ++i)
    dist.mass[i] = static_cast<double>(acc.counts[i]) / static_cast<double>(acc.n);
  return dist;
}

Estimate expected_loss(const ThresholdRule& rule, const ObservationModel& model,
                       const LossSpec& loss, std::uint64_t n_reps,
                       const McContext& ctx, const RunLimits& limits) {
  validate(rule);
  validate(model);
  check_step_cap(limits);
  if (!(loss.delay_cost > 0.0) || !std::isfinite(loss.delay_cost))
    throw std::invalid_argument("delay cost must be positive and finite");
  if (!(loss.prior.rho > 0.0 && loss.prior.rho < 1.0))
    throw std::invalid_argument("prior rho must be in (0, 1)");
  if (n_reps == 0) throw std::invalid_argument("n_reps must be positive");
  const double log_q = std::log1p(-loss.prior.rho);
  const MeanAcc acc = run_chunked<MeanAcc>(
      ctx, n_reps, [&](std::uint64_t begin, std::uint64_t end, MeanAcc& slot) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::uint64_t rep = begin; rep < end; ++rep) {
          Engine eng = make_engine(ctx.seed, rep);
          // Geometric prior by inversion: P(nu = k) = rho (1-rho)^{k-1}.
          const double u = unit(eng);
          const std::uint64_t nu =
              1 + static_cast<std::uint64_t>(std::log1p(-u) / log_q);
          const RunResult rr =
              run_to_alarm(rule, model, ChangeSpec::at(nu), eng, limits);
          if (rr.truncated) {
            ++slot.flagged;
            continue;
          }
          const double value = rr.n < nu
                                   ? 1.0
                                   : loss.delay_cost *
                                         static_cast<double>(rr.n - nu);
          slot.add(value);
        }
      });
  check_censoring(acc.flagged, acc.n + acc.flagged, "loss runs");
  return {acc.mean(), acc.std_err(), acc.n};
}

MixtureAddReport mixture_add_experiment(const ThresholdRule& first, double b1,
                                        const ThresholdRule& second, double b2,
                                        const ObservationModel& model,
                                        std::uint64_t nu, std::uint64_t n_reps,
                                        const McContext& ctx,
                                        const RunLimits& limits) {
  validate(MixtureRule{first, second});
  validate(model);
  check_step_cap(limits);
  if (!(b1 > 0.0) || !(b2 > 0.0) || !std::isfinite(b1) || !std::isfinite(b2))
    throw std::invalid_argument("mean-cycle targets must be positive and finite");
  if (nu == 0) throw std::invalid_argument("changepoint index must be >= 1");
  if (n_reps == 0) throw std::invalid_argument("n_reps must be positive");

  SeedSequence seq(ctx.seed);
  McContext mix_ctx = ctx;
  mix_ctx.seed = seq.next();
  McContext first_ctx = ctx;
  first_ctx.seed = seq.next();
  McContext second_ctx = ctx;
  second_ctx.seed = seq.next();

  MixtureAddReport report;
  report.b1 = b1;
  report.b2 = b2;
  report.first_add = stationary_add_direct(first, model, nu, n_reps, first_ctx, limits);
  report.second_add = stationary_add_direct(second, model, nu, n_reps, second_ctx, limits);

  struct MixAcc {
    MeanAcc delay;
    std::uint64_t first_covering = 0;
    void merge(const MixAcc& o) {
      delay.merge(o.delay);
      first_covering += o.first_covering;
    }
  };
  const std::uint64_t epoch_cap = nu + limits.step_cap;
  const MixAcc acc = run_chunked<MixAcc>(
      mix_ctx, n_reps, [&](std::uint64_t begin, std::uint64_t end, MixAcc& slot) {
        RuleStepper steppers[2] = {RuleStepper(first), RuleStepper(second)};
        for (std::uint64_t rep = begin; rep < end; ++rep) {
          Engine eng = make_engine(mix_ctx.seed, rep);
          ModelSampler sampler(model);
          std::bernoulli_distribution coin(0.5);
          std::uint64_t epoch = 0;
          bool done = false;
          while (!done) {
            const int type = coin(eng) ? 1 : 0;
            RuleStepper& st = steppers[type];
            st.reset();
            const bool want_log = st.wants_log();
            bool alarmed = false;
            while (epoch < epoch_cap) {
              const double x = epoch + 1 >= nu ? sampler.draw_post(eng)
                                               : sampler.draw_pre(eng);
              ++epoch;
              if (st.advance(model_lr_value(model, x, want_log))) {
                alarmed = true;
                break;
              }
            }
            if (!alarmed) {
              ++slot.delay.flagged;
              break;
            }
            if (epoch >= nu) {
              slot.delay.add(static_cast<double>(epoch - nu));
              if (type == 0) ++slot.first_covering;
              done = true;
            }
          }
        }
      });
  check_censoring(acc.delay.flagged, acc.delay.n + acc.delay.flagged,
                  "mixture runs");

  report.mixture_add = {acc.delay.mean(), acc.delay.std_err(), acc.delay.n};
  const double p1 = b1 / (b1 + b2);
  const double p2 = 1.0 - p1;
  report.predicted_first_freq = p1;
  report.predicted_add =
      p1 * report.first_add.value + p2 * report.second_add.value;
  report.predicted_add_se =
      std::sqrt(p1 * p1 * report.first_add.std_err * report.first_add.std_err +
                p2 * p2 * report.second_add.std_err * report.second_add.std_err);
  const double freq = static_cast<double>(acc.first_covering) /
                      static_cast<double>(acc.delay.n);
  report.covering_first_freq = freq;
  report.covering_first_se =
      std::sqrt(std::max(0.0, freq * (1.0 - freq)) /
                static_cast<double>(acc.delay.n));
  return report;
}

ComparisonReport compare_rules(
    const std::vector<std::pair<std::string, CalibrationResult>>& rules,
    const ObservationModel& model, double target_arl, double rel_tol,
    std::uint64_t n_reps, const McContext& ctx, const RunLimits& limits) {
  if (rules.empty()) throw std::invalid_argument("nothing to compare");
  if (!(target_arl > 1.0) || !(rel_tol > 0.0))
    throw std::invalid_argument("comparison target out of range");
  for (const auto& [name, cal] : rules) {
    if (std::abs(cal.arl.mean - target_arl) > rel_tol * target_arl) {
      throw ComparisonError(
          name + " is calibrated to " + std::to_string(cal.arl.mean) +
          ", outside the tolerance band around " + std::to_string(target_arl));
    }
  }

  ComparisonReport report;
  report.target_arl = target_arl;
  report.note =
      "rules are calibrated into a tolerance band around the target mean time "
      "to false alarm, not to exact equality; rankings hold within that band";
  for (const auto& [name, cal] : rules) {
    // Same ctx.seed for every row: common random numbers.
    OperatingCharacteristics oc =
        operating_characteristics(cal.rule, model, 0, n_reps, ctx, limits);
    report.rows.push_back(
        {name, cal.rule, oc.arl2fa, oc.integral_add, oc.stationary_add});
  }

  const RuleMetricsRow* base = nullptr;
  for (const auto& row : report.rows) {
    if (row.rule.kind == RuleKind::sr) {
      base = &row;
      break;
    }
  }
  if (base == nullptr) {
    report.flags.push_back("no sr baseline among the compared rules");
    return report;
  }
  for (const auto& row : report.rows) {
    if (&row == base) continue;
    auto beats = [](const Estimate& a, const Estimate& b) {
      const double se =
          std::sqrt(a.std_err * a.std_err + b.std_err * b.std_err);
      return a.value < b.value - 3.0 * se;
    };
    if (beats(row.integral_add, base->integral_add)) {
      report.flags.push_back(row.name +
                             " beats the sr baseline on the summed delay by "
                             "more than 3 combined std errors");
    }
    if (beats(row.stationary_add, base->stationary_add)) {
      report.flags.push_back(row.name +
                             " beats the sr baseline on the stationary delay "
                             "by more than 3 combined std errors");
    }
  }
  return report;
}

double sup_conditional_add(const ThresholdRule& rule,
                           const ObservationModel& model, std::uint64_t k_cap,
                           std::uint64_t n_reps, const McContext& ctx,
                           const RunLimits& limits) {
  const SweepAcc acc = run_sweep(rule, model, k_cap, n_reps, ctx, limits);
  check_sweep_censoring(acc);
  return summarize_sweep(acc, k_cap).sup_conditional_add;
}

}  // namespace seqdet
