#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <string>

#include "seqdet/metrics.hpp"
#include "seqdet/report.hpp"

using namespace seqdet;

TEST_CASE("real formatting round-trips doubles exactly") {
  for (const double v : {1.0 / 3.0, 0.1, 2.0, -1e-9, 6.02214076e23, 0.0}) {
    const std::string s = fmt_real(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(fmt_real(2.0) == "2");
}

TEST_CASE("csv rows follow the fixed schema") {
  std::ostringstream out;
  CsvWriter w(out);
  w.row({"sr", "arl2fa", std::nullopt, 2.0, 0.5, 100, 7});
  w.row({"sr", "survival", 3, 0.25, 0.0, 100, 7});
  CHECK(out.str() ==
        "rule,metric,k,estimate,std_err,n_reps,seed\n"
        "sr,arl2fa,,2,0.5,100,7\n"
        "sr,survival,3,0.25,0,100,7\n");
}

TEST_CASE("json summaries carry the estimate triple and end with a newline") {
  const Estimate e{0.5, 0.01, 1000};
  const nlohmann::ordered_json j = to_json(e);
  CHECK(j.at("estimate").get<double>() == 0.5);
  CHECK(j.at("std_err").get<double>() == 0.01);
  CHECK(j.at("n_reps").get<std::uint64_t>() == 1000);

  const std::string text = render_json(j);
  CHECK(text.back() == '\n');
  // insertion order is preserved
  CHECK(text.find("estimate") < text.find("std_err"));
  CHECK(text.find("std_err") < text.find("n_reps"));

  CHECK(render_json(j) == render_json(to_json(e)));
}

TEST_CASE("operating characteristics serialize every reported field") {
  OperatingCharacteristics oc;
  oc.arl2fa = {2.0, 0.01, 1000, 0.0};
  oc.integral_add = {0.66, 0.02, 1000};
  oc.stationary_add = {0.33, 0.01, 1000};
  oc.tail_bound = 0.001;
  oc.horizon = 10;
  oc.sum_horizon = 64;
  oc.horizon_ok = true;
  oc.survival = {1.0, 0.5};
  oc.conditional_add = {{0.3, 0.05, 900}};
  oc.weights = {0.5, 0.25};
  const nlohmann::ordered_json j = to_json(oc);
  for (const char* key :
       {"arl2fa", "integral_add", "tail_bound", "horizon", "sum_horizon",
        "horizon_ok", "stationary_add", "sup_conditional_add", "survival",
        "conditional_add", "weights"})
    CHECK(j.contains(key));
  CHECK(j.at("survival").size() == 2);
}
