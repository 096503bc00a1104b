#include "seqdet/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "seqdet/errors.hpp"

namespace seqdet {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "family", "pre", "post",  "rule", "rules",   "threshold", "B", "rho",
      "c",      "nu",  "n_reps", "K",   "seed",    "rel_tol",   "out"};
  return keys;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

double parse_real(std::string_view v, int line, const std::string& key) {
  const std::string s(v);
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    fail(line, key + " is not a number: '" + s + "'");
  }
  if (pos != s.size()) fail(line, key + " has trailing characters: '" + s + "'");
  if (!std::isfinite(out)) fail(line, key + " must be finite");
  return out;
}

std::uint64_t parse_count(std::string_view v, int line, const std::string& key) {
  const std::string_view t = trim(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    fail(line, key + " is not a nonnegative integer: '" + std::string(t) + "'");
  return out;
}

std::vector<double> parse_real_list(std::string_view v, int line,
                                    const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss{std::string(v)};
  while (std::getline(ss, item, ',')) {
    const std::string_view t = trim(item);
    if (t.empty()) fail(line, key + " has an empty list element");
    out.push_back(parse_real(t, line, key));
  }
  if (out.empty()) fail(line, key + " must not be empty");
  return out;
}

RuleKind parse_rule_kind(std::string_view v, int line) {
  const std::string s{trim(v)};
  try {
    return rule_kind_from_string(s);
  } catch (const std::exception&) {
    fail(line, "unknown rule kind '" + s + "' (expected sr, shiryaev, or cusum)");
  }
}

ObservationModel build_model(const std::string& family,
                             const std::vector<double>& pre,
                             const std::vector<double>& post, int line) {
  auto arity = [&](std::size_t lo, std::size_t hi) {
    if (pre.size() < lo || pre.size() > hi || post.size() != pre.size())
      fail(line, "family " + family + " expects matching pre/post lists of " +
                     (lo == hi ? std::to_string(lo)
                               : std::to_string(lo) + " or " + std::to_string(hi)) +
                     " parameter(s)");
  };
  try {
    if (family == "gaussian" || family == "gaussian_mean_shift") {
      arity(1, 2);
      const double variance = pre.size() == 2 ? pre[1] : 1.0;
      if (pre.size() == 2 && post[1] != variance)
        fail(line, "gaussian pre/post variances must match");
      return ObservationModel::gaussian_mean_shift(pre[0], post[0], variance);
    }
    if (family == "bernoulli") {
      arity(1, 1);
      return ObservationModel::bernoulli(pre[0], post[0]);
    }
    if (family == "exponential" || family == "exponential_rate") {
      arity(1, 1);
      return ObservationModel::exponential_rate(pre[0], post[0]);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(line, std::string("invalid model parameters: ") + e.what());
  }
  fail(line, "unknown family '" + family +
                 "' (expected gaussian, bernoulli, or exponential)");
}

}  // namespace

ExperimentConfig parse_config_text(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string family;
  std::vector<double> pre, post;
  int family_line = 0;

  int line_no = 0;
  std::string line;
  std::stringstream stream{std::string(text)};
  while (std::getline(stream, line)) {
    ++line_no;
    std::string_view sv = line;
    if (const auto hash = sv.find('#'); hash != std::string_view::npos)
      sv = sv.substr(0, hash);
    sv = trim(sv);
    if (sv.empty()) continue;
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key=value");
    const std::string key{trim(sv.substr(0, eq))};
    const std::string_view value = trim(sv.substr(eq + 1));
    if (known_keys().count(key) == 0) fail(line_no, "unknown key '" + key + "'");
    if (!seen.insert(key).second) fail(line_no, "duplicate key '" + key + "'");
    if (value.empty()) fail(line_no, key + " has no value");

    if (key == "family") {
      family = std::string(value);
      family_line = line_no;
    } else if (key == "pre") {
      pre = parse_real_list(value, line_no, key);
    } else if (key == "post") {
      post = parse_real_list(value, line_no, key);
    } else if (key == "rule") {
      cfg.rule = parse_rule_kind(value, line_no);
    } else if (key == "rules") {
      std::string item;
      std::stringstream ss{std::string(value)};
      while (std::getline(ss, item, ','))
        cfg.rules.push_back(parse_rule_kind(item, line_no));
      if (cfg.rules.empty()) fail(line_no, "rules must not be empty");
    } else if (key == "threshold") {
      const double v = parse_real(value, line_no, key);
      if (!(v > 0.0)) fail(line_no, "threshold must be positive");
      cfg.threshold = v;
    } else if (key == "B") {
      const double v = parse_real(value, line_no, key);
      if (!(v > 1.0)) fail(line_no, "B must exceed 1");
      cfg.target_arl = v;
    } else if (key == "rho") {
      const double v = parse_real(value, line_no, key);
      if (!(v > 0.0 && v < 1.0)) fail(line_no, "rho must lie in (0, 1)");
      cfg.rho = v;
    } else if (key == "c") {
      const double v = parse_real(value, line_no, key);
      if (!(v > 0.0)) fail(line_no, "c must be positive");
      cfg.delay_cost = v;
    } else if (key == "nu") {
      if (value == "inf") {
        cfg.nu_infinite = true;
      } else {
        const std::uint64_t v = parse_count(value, line_no, key);
        if (v == 0) fail(line_no, "nu must be >= 1 (or 'inf')");
        cfg.nu = v;
      }
    } else if (key == "n_reps") {
      const std::uint64_t v = parse_count(value, line_no, key);
      if (v == 0) fail(line_no, "n_reps must be positive");
      cfg.n_reps = v;
    } else if (key == "K") {
      cfg.horizon = value == "auto" ? 0 : parse_count(value, line_no, key);
    } else if (key == "seed") {
      cfg.seed = parse_count(value, line_no, key);
    } else if (key == "rel_tol") {
      const double v = parse_real(value, line_no, key);
      if (!(v > 0.0 && v <= 0.1)) fail(line_no, "rel_tol must lie in (0, 0.1]");
      cfg.rel_tol = v;
    } else if (key == "out") {
      cfg.out = std::string(value);
    }
  }

  const bool any_model = !family.empty() || !pre.empty() || !post.empty();
  if (any_model) {
    if (family.empty() || pre.empty() || post.empty())
      throw ConfigError("config: family, pre and post must be given together");
    cfg.model = build_model(family, pre, post, family_line);
  }
  if (cfg.threshold && cfg.target_arl)
    throw ConfigError("config: give exactly one of threshold and B, not both");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace seqdet
