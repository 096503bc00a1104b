#include "seqdet/detectors.hpp"

#include <string>

#include "seqdet/errors.hpp"

namespace seqdet {

namespace {

void require_lr(double lr) {
  if (!std::isfinite(lr) || lr <= 0.0)
    throw std::domain_error("likelihood ratio must be positive and finite");
}

void require_log_lr(double log_lr) {
  if (!std::isfinite(log_lr))
    throw std::domain_error("log likelihood ratio must be finite");
}

// Likelihood-ratio sources for the detection loops. Each next() consumes one
// observation and yields the plain or log ratio as asked.
struct ModelLr {
  const ObservationModel* model;
  ModelSampler sampler;
  ChangeSpec change;
  Engine* eng;
  std::uint64_t index = 0;

  ModelLr(const ObservationModel& m, const ChangeSpec& c, Engine& e)
      : model(&m), sampler(m), change(c), eng(&e) {}

  double next(bool want_log) {
    const double x = sampler.draw(*eng, change, ++index);
    return want_log ? log_likelihood_ratio(*model, x)
                    : likelihood_ratio(*model, x);
  }
};

struct SpanLr {
  std::span<const double> lrs;
  std::uint64_t index = 0;

  double next(bool want_log) {
    if (index >= lrs.size())
      throw std::invalid_argument(
          "likelihood-ratio sequence exhausted before the alarm");
    const double lr = lrs[index++];
    require_lr(lr);
    return want_log ? std::log(lr) : lr;
  }
};

template <class Lr>
RunResult run_core(const ThresholdRule& rule, Lr& lr, const RunLimits& limits) {
  RuleStepper st(rule);
  const bool want_log = st.wants_log();
  for (std::uint64_t n = 1; n <= limits.step_cap; ++n)
    if (st.advance(lr.next(want_log))) return {n, false};
  return {limits.step_cap, true};
}

template <class Lr>
MultiCyclicTrace multicyclic_core(const ThresholdRule& rule,
                                  const ChangeSpec& change, Lr& lr,
                                  const MultiCyclicLimits& limits) {
  MultiCyclicTrace tr;
  tr.nu = change.has_change() ? change.nu() : 0;
  RuleStepper st(rule);
  const bool want_log = st.wants_log();
  std::uint64_t epoch = 0;
  while (tr.cycle_lengths.size() < limits.max_cycles) {
    st.reset();
    std::uint64_t len = 0;
    bool alarmed = false;
    while (epoch < limits.step_cap) {
      ++epoch;
      ++len;
      if (st.advance(lr.next(want_log))) {
        alarmed = true;
        break;
      }
    }
    if (!alarmed) {  // observation budget exhausted mid-cycle
      tr.truncated = true;
      return tr;
    }
    tr.cycle_lengths.push_back(len);
    tr.alarm_epochs.push_back(epoch);
    if (change.has_change() && epoch >= tr.nu) {
      tr.j_nu = tr.cycle_lengths.size();
      tr.detection_epoch = epoch;
      return tr;
    }
  }
  // Cycle budget exhausted: the requested sample when the change never comes,
  // a censored run otherwise.
  tr.truncated = change.has_change();
  return tr;
}

}  // namespace

SrState sr_update(SrState state, double lr) {
  require_lr(lr);
  state.r = (1.0 + state.r) * lr;
  ++state.n;
  return state;
}

ShiryaevState shiryaev_update(ShiryaevState state, double lr) {
  require_lr(lr);
  if (!(state.rho >= 0.0 && state.rho < 1.0))
    throw std::domain_error("shiryaev rho must be in [0, 1)");
  state.r_rho = (1.0 + state.r_rho) * lr / (1.0 - state.rho);
  ++state.n;
  return state;
}

CusumState cusum_update(CusumState state, double log_lr) {
  require_log_lr(log_lr);
  state.w = std::max(0.0, state.w + log_lr);
  ++state.n;
  return state;
}

double shiryaev_posterior(const ShiryaevState& state) {
  if (!(state.rho > 0.0 && state.rho < 1.0))
    throw std::domain_error("posterior is undefined at rho = 0");
  if (!(state.r_rho >= 0.0))
    throw std::domain_error("shiryaev statistic must be nonnegative");
  return state.r_rho / (state.r_rho + 1.0 / state.rho);
}

const char* to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::sr: return "sr";
    case RuleKind::shiryaev: return "shiryaev";
    case RuleKind::cusum: return "cusum";
  }
  return "unknown";
}

RuleKind rule_kind_from_string(const std::string& name) {
  if (name == "sr") return RuleKind::sr;
  if (name == "shiryaev") return RuleKind::shiryaev;
  if (name == "cusum") return RuleKind::cusum;
  throw std::invalid_argument("unknown rule kind: " + name);
}

double ThresholdRule::posterior_threshold() const {
  if (kind != RuleKind::shiryaev)
    throw std::logic_error("posterior threshold is defined for shiryaev rules only");
  validate(*this);
  return threshold * rho / (1.0 + threshold * rho);
}

void validate(const ThresholdRule& rule) {
  if (!std::isfinite(rule.threshold) || rule.threshold <= 0.0)
    throw std::invalid_argument("rule threshold must be positive and finite");
  if (rule.kind == RuleKind::shiryaev) {
    if (!(rule.rho > 0.0 && rule.rho < 1.0))
      throw std::invalid_argument("shiryaev rule needs rho in (0, 1)");
  } else if (rule.rho != 0.0) {
    throw std::invalid_argument("rho is meaningful for shiryaev rules only");
  }
}

RuleStepper::RuleStepper(const ThresholdRule& rule) {
  validate(rule);
  if (rule.kind == RuleKind::cusum) {
    mode_ = Mode::reflected;
    wants_log_ = true;
    cutoff_ = rule.threshold;
    initial_ = 0.0;
  } else {
    const bool log_domain = rule.threshold > kLogDomainThreshold;
    mode_ = log_domain ? Mode::log : Mode::linear;
    wants_log_ = log_domain;
    gain_ = 1.0 / (1.0 - rule.rho);
    log_gain_ = -std::log1p(-rule.rho);
    cutoff_ = log_domain ? std::log(rule.threshold) : rule.threshold;
    initial_ = log_domain ? -std::numeric_limits<double>::infinity() : 0.0;
  }
  s_ = initial_;
}

RunResult run_to_alarm(const ThresholdRule& rule, const ObservationModel& model,
                       const ChangeSpec& change, Engine& eng,
                       const RunLimits& limits) {
  ModelLr lr(model, change, eng);
  return run_core(rule, lr, limits);
}

RunResult run_to_alarm_lr(const ThresholdRule& rule, std::span<const double> lrs,
                          const RunLimits& limits) {
  SpanLr lr{lrs};
  return run_core(rule, lr, limits);
}

MultiCyclicTrace multicyclic_run(const ThresholdRule& rule,
                                 const ObservationModel& model,
                                 const ChangeSpec& change, Engine& eng,
                                 const MultiCyclicLimits& limits) {
  ModelLr lr(model, change, eng);
  return multicyclic_core(rule, change, lr, limits);
}

MultiCyclicTrace multicyclic_run_lr(const ThresholdRule& rule,
                                    std::span<const double> lrs,
                                    const ChangeSpec& change,
                                    const MultiCyclicLimits& limits) {
  SpanLr lr{lrs};
  return multicyclic_core(rule, change, lr, limits);
}

void validate(const MixtureRule& rule) {
  validate(rule.first);
  validate(rule.second);
  if (rule.first.kind != RuleKind::sr || rule.second.kind != RuleKind::sr)
    throw std::invalid_argument("mixture cycles must both use sr rules");
}

MixtureTrace mixture_multicyclic_run(const MixtureRule& rule,
                                     const ObservationModel& model,
                                     const ChangeSpec& change, Engine& eng,
                                     const MultiCyclicLimits& limits) {
  validate(rule);
  MixtureTrace mt;
  MultiCyclicTrace& tr = mt.base;
  tr.nu = change.has_change() ? change.nu() : 0;
  ModelLr lr(model, change, eng);
  RuleStepper steppers[2] = {RuleStepper(rule.first), RuleStepper(rule.second)};
  std::bernoulli_distribution coin(0.5);
  std::uint64_t epoch = 0;
  while (tr.cycle_lengths.size() < limits.max_cycles) {
    const std::uint8_t type = coin(eng) ? 1 : 0;  // coin first, then the cycle's data
    RuleStepper& st = steppers[type];
    st.reset();
    const bool want_log = st.wants_log();
    std::uint64_t len = 0;
    bool alarmed = false;
    while (epoch < limits.step_cap) {
      ++epoch;
      ++len;
      if (st.advance(lr.next(want_log))) {
        alarmed = true;
        break;
      }
    }
    if (!alarmed) {
      tr.truncated = true;
      return mt;
    }
    tr.cycle_lengths.push_back(len);
    tr.alarm_epochs.push_back(epoch);
    mt.cycle_types.push_back(type);
    if (change.has_change() && epoch >= tr.nu) {
      tr.j_nu = tr.cycle_lengths.size();
      tr.detection_epoch = epoch;
      mt.covering_type = type;
      return mt;
    }
  }
  tr.truncated = change.has_change();
  return mt;
}

}  // namespace seqdet
