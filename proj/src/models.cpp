#include "seqdet/models.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "seqdet/errors.hpp"

namespace seqdet {

namespace {

double param(const std::vector<double>& p, std::size_t i, double fallback) {
  return i < p.size() ? p[i] : fallback;
}

struct GaussianParams {
  double mean0, mean1, variance;
};

GaussianParams gaussian_params(const ObservationModel& m) {
  return {m.pre[0], m.post[0], param(m.pre, 1, 1.0)};
}

void require_finite_obs(double x) {
  if (!std::isfinite(x)) throw std::domain_error("observation is not finite");
}

}  // namespace

const char* to_string(Family family) {
  switch (family) {
    case Family::gaussian_mean_shift: return "gaussian_mean_shift";
    case Family::bernoulli: return "bernoulli";
    case Family::exponential_rate: return "exponential_rate";
  }
  return "unknown";
}

ObservationModel ObservationModel::gaussian_mean_shift(double pre_mean,
                                                       double post_mean,
                                                       double variance) {
  ObservationModel m{Family::gaussian_mean_shift,
                     {pre_mean, variance},
                     {post_mean, variance}};
  validate(m);
  return m;
}

ObservationModel ObservationModel::bernoulli(double p0, double p1) {
  ObservationModel m{Family::bernoulli, {p0}, {p1}};
  validate(m);
  return m;
}

ObservationModel ObservationModel::exponential_rate(double rate0, double rate1) {
  ObservationModel m{Family::exponential_rate, {rate0}, {rate1}};
  validate(m);
  return m;
}

void validate(const ObservationModel& m) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  for (double v : m.pre) require(std::isfinite(v), "model parameter not finite");
  for (double v : m.post) require(std::isfinite(v), "model parameter not finite");
  switch (m.family) {
    case Family::gaussian_mean_shift: {
      require(!m.pre.empty() && m.pre.size() <= 2, "gaussian needs {mean[, variance]}");
      require(m.post.size() == m.pre.size(), "gaussian pre/post parameter shapes differ");
      const double var0 = param(m.pre, 1, 1.0), var1 = param(m.post, 1, 1.0);
      require(var0 > 0.0, "gaussian variance must be positive");
      require(var0 == var1, "gaussian pre/post variances must match");
      require(m.pre[0] != m.post[0], "gaussian means must differ");
      break;
    }
    case Family::bernoulli: {
      require(m.pre.size() == 1 && m.post.size() == 1, "bernoulli needs {p}");
      require(m.pre[0] > 0.0 && m.pre[0] < 1.0, "bernoulli p0 must be in (0,1)");
      require(m.post[0] > 0.0 && m.post[0] < 1.0, "bernoulli p1 must be in (0,1)");
      require(m.pre[0] != m.post[0], "bernoulli p0 and p1 must differ");
      break;
    }
    case Family::exponential_rate: {
      require(m.pre.size() == 1 && m.post.size() == 1, "exponential needs {rate}");
      require(m.pre[0] > 0.0, "exponential rate0 must be positive");
      require(m.post[0] > 0.0, "exponential rate1 must be positive");
      require(m.pre[0] != m.post[0], "exponential rates must differ");
      break;
    }
  }
}

ChangeSpec ChangeSpec::at(std::uint64_t nu) {
  if (nu == 0) throw std::invalid_argument("changepoint index must be >= 1");
  if (nu == kNever) throw std::invalid_argument("changepoint index out of range");
  return ChangeSpec(nu);
}

std::uint64_t ChangeSpec::nu() const {
  if (!has_change()) throw std::logic_error("no changepoint: nu is undefined");
  return nu_;
}

double likelihood_ratio(const ObservationModel& m, double x) {
  require_finite_obs(x);
  switch (m.family) {
    case Family::gaussian_mean_shift: {
      const auto [mean0, mean1, variance] = gaussian_params(m);
      return std::exp((mean1 - mean0) / variance * (x - 0.5 * (mean0 + mean1)));
    }
    case Family::bernoulli: {
      if (x == 1.0) return m.post[0] / m.pre[0];
      if (x == 0.0) return (1.0 - m.post[0]) / (1.0 - m.pre[0]);
      throw std::domain_error("bernoulli observation must be 0 or 1");
    }
    case Family::exponential_rate: {
      if (x < 0.0) throw std::domain_error("exponential observation must be >= 0");
      const double rate0 = m.pre[0], rate1 = m.post[0];
      return rate1 / rate0 * std::exp(-(rate1 - rate0) * x);
    }
  }
  throw std::logic_error("unreachable model family");
}

double log_likelihood_ratio(const ObservationModel& m, double x) {
  require_finite_obs(x);
  switch (m.family) {
    case Family::gaussian_mean_shift: {
      const auto [mean0, mean1, variance] = gaussian_params(m);
      return (mean1 - mean0) / variance * (x - 0.5 * (mean0 + mean1));
    }
    case Family::bernoulli: {
      if (x == 1.0) return std::log(m.post[0] / m.pre[0]);
      if (x == 0.0) return std::log((1.0 - m.post[0]) / (1.0 - m.pre[0]));
      throw std::domain_error("bernoulli observation must be 0 or 1");
    }
    case Family::exponential_rate: {
      if (x < 0.0) throw std::domain_error("exponential observation must be >= 0");
      const double rate0 = m.pre[0], rate1 = m.post[0];
      return std::log(rate1 / rate0) - (rate1 - rate0) * x;
    }
  }
  throw std::logic_error("unreachable model family");
}

ModelSampler::ModelSampler(const ObservationModel& m) : family_(m.family) {
  validate(m);
  switch (family_) {
    case Family::gaussian_mean_shift: {
      const auto [mean0, mean1, variance] = gaussian_params(m);
      const double sd = std::sqrt(variance);
      normal_pre_ = std::normal_distribution<double>(mean0, sd);
      normal_post_ = std::normal_distribution<double>(mean1, sd);
      break;
    }
    case Family::bernoulli:
      bern_pre_ = std::bernoulli_distribution(m.pre[0]);
      bern_post_ = std::bernoulli_distribution(m.post[0]);
      break;
    case Family::exponential_rate:
      exp_pre_ = std::exponential_distribution<double>(m.pre[0]);
      exp_post_ = std::exponential_distribution<double>(m.post[0]);
      break;
  }
}

double ModelSampler::draw_pre(Engine& eng) {
  switch (family_) {
    case Family::gaussian_mean_shift: return normal_pre_(eng);
    case Family::bernoulli: return bern_pre_(eng) ? 1.0 : 0.0;
    case Family::exponential_rate: return exp_pre_(eng);
  }
  return 0.0;
}

double ModelSampler::draw_post(Engine& eng) {
  switch (family_) {
    case Family::gaussian_mean_shift: return normal_post_(eng);
    case Family::bernoulli: return bern_post_(eng) ? 1.0 : 0.0;
    case Family::exponential_rate: return exp_post_(eng);
  }
  return 0.0;
}

std::vector<double> sample_path(const ObservationModel& model,
                                const ChangeSpec& change, std::uint64_t length,
                                Engine& eng) {
  ModelSampler sampler(model);
  std::vector<double> path;
  path.reserve(length);
  for (std::uint64_t i = 1; i <= length; ++i) path.push_back(sampler.draw(eng, change, i));
  return path;
}

void for_each_path(
    const ObservationModel& model, const ChangeSpec& change, std::uint64_t n,
    const std::function<void(std::span<const double>, double)>& fn) {
  validate(model);
  if (model.family != Family::bernoulli) {
    throw UnsupportedModelError(
        std::string("exact enumeration requires a finite-support family, got ") +
        to_string(model.family));
  }
  if (n == 0 || n > kEnumerationCap) {
    throw std::invalid_argument("enumeration length must be in [1, " +
                                std::to_string(kEnumerationCap) + "]");
  }
  const double p0 = model.pre[0], p1 = model.post[0];
  std::vector<double> path(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double prob = 1.0;
    for (std::uint64_t i = 1; i <= n; ++i) {
      const bool one = (mask >> (i - 1)) & 1;
      const double p = change.is_post(i) ? p1 : p0;
      path[i - 1] = one ? 1.0 : 0.0;
      prob *= one ? p : 1.0 - p;
    }
    fn(path, prob);
  }
}

std::vector<std::pair<std::vector<double>, double>> enumerate_paths(
    const ObservationModel& model, const ChangeSpec& change, std::uint64_t n) {
  std::vector<std::pair<std::vector<double>, double>> out;
  out.reserve(std::size_t{1} << n);
  for_each_path(model, change, n, [&](std::span<const double> path, double prob) {
    out.emplace_back(std::vector<double>(path.begin(), path.end()), prob);
  });
  return out;
}

}  // namespace seqdet
