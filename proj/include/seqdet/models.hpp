#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "seqdet/rng.hpp"

namespace seqdet {

enum class Family { gaussian_mean_shift, bernoulli, exponential_rate };

const char* to_string(Family family);

// Simple-vs-simple observation model: observations are iid f0 before the
// changepoint and iid f1 from it on. Instances are immutable value types and
// safe to share across threads.
//
// Parameter layout:
//   gaussian_mean_shift: {mean[, variance]}, variance shared by f0 and f1
//   bernoulli:           {success probability}
//   exponential_rate:    {rate}
struct ObservationModel {
  Family family = Family::gaussian_mean_shift;
  std::vector<double> pre;
  std::vector<double> post;

  static ObservationModel gaussian_mean_shift(double pre_mean, double post_mean,
                                              double variance = 1.0);
  static ObservationModel bernoulli(double p0, double p1);
  static ObservationModel exponential_rate(double rate0, double rate1);
};

// Throws std::invalid_argument when parameters are out of range or the
// pre/post distributions coincide.
void validate(const ObservationModel& model);

// Changepoint position: nu is the 1-based index of the first post-change
// observation; never() means the change never happens.
class ChangeSpec {
 public:
  static ChangeSpec at(std::uint64_t nu);
  static ChangeSpec never() noexcept { return ChangeSpec(kNever); }

  bool has_change() const noexcept { return nu_ != kNever; }
  std::uint64_t nu() const;  // throws std::logic_error when never()
  bool is_post(std::uint64_t index) const noexcept { return index >= nu_; }

  friend bool operator==(const ChangeSpec&, const ChangeSpec&) = default;

 private:
  explicit ChangeSpec(std::uint64_t nu) noexcept : nu_(nu) {}
  static constexpr std::uint64_t kNever = ~std::uint64_t{0};
  std::uint64_t nu_;
};

// Likelihood ratio f1(x)/f0(x) and its logarithm. Throw std::domain_error for
// observations outside the support of f0.
double likelihood_ratio(const ObservationModel& model, double x);
double log_likelihood_ratio(const ObservationModel& model, double x);

// Per-replication sampler; owns the distribution objects for one stream so
// replications never share distribution state.
class ModelSampler {
 public:
  explicit ModelSampler(const ObservationModel& model);

  double draw_pre(Engine& eng);
  double draw_post(Engine& eng);
  double draw(Engine& eng, const ChangeSpec& change, std::uint64_t index) {
    return change.is_post(index) ? draw_post(eng) : draw_pre(eng);
  }

 private:
  Family family_;
  std::normal_distribution<double> normal_pre_, normal_post_;
  std::bernoulli_distribution bern_pre_, bern_post_;
  std::exponential_distribution<double> exp_pre_, exp_post_;
};

// Draws observations 1..length with the change applied at change.nu().
// Deterministic given the engine state.
std::vector<double> sample_path(const ObservationModel& model,
                                const ChangeSpec& change, std::uint64_t length,
                                Engine& eng);

inline constexpr std::uint64_t kEnumerationCap = 20;

// Exact path enumeration for finite-support families (bernoulli only).
// Calls fn(path, probability) once per path of length n; probabilities sum
// to 1 up to roundoff. Throws UnsupportedModelError for continuous families
// and std::invalid_argument when n exceeds the cap.
void for_each_path(
    const ObservationModel& model, const ChangeSpec& change, std::uint64_t n,
    const std::function<void(std::span<const double>, double)>& fn);

std::vector<std::pair<std::vector<double>, double>> enumerate_paths(
    const ObservationModel& model, const ChangeSpec& change, std::uint64_t n);

}  // namespace seqdet
