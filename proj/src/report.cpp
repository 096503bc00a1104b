#include "seqdet/report.hpp"

#include <cstdio>

namespace seqdet {

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& out) : out_(out) {
  out_ << "rule,metric,k,estimate,std_err,n_reps,seed\n";
}

void CsvWriter::row(const CsvRow& r) {
  out_ << r.rule << ',' << r.metric << ',';
  if (r.k) out_ << *r.k;
  out_ << ',' << fmt_real(r.estimate) << ',' << fmt_real(r.std_err) << ','
       << r.n_reps << ',' << r.seed << '\n';
}

nlohmann::ordered_json to_json(const Estimate& e) {
  return {{"estimate", e.value}, {"std_err", e.std_err}, {"n_reps", e.n_reps}};
}

nlohmann::ordered_json to_json(const ArlEstimate& e) {
  return {{"estimate", e.mean},
          {"std_err", e.std_err},
          {"n_reps", e.n_reps},
          {"truncated_fraction", e.truncated_fraction}};
}

nlohmann::ordered_json to_json(const CalibrationResult& r) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(r.rule.kind);
  j["threshold"] = r.rule.threshold;
  if (r.rule.kind == RuleKind::shiryaev) j["rho"] = r.rule.rho;
  j["arl"] = to_json(r.arl);
  j["evaluations"] = r.evaluations;
  return j;
}

nlohmann::ordered_json to_json(const OperatingCharacteristics& oc) {
  nlohmann::ordered_json j;
  j["arl2fa"] = to_json(oc.arl2fa);
  j["integral_add"] = to_json(oc.integral_add);
  j["tail_bound"] = oc.tail_bound;
  j["horizon"] = oc.horizon;
  j["sum_horizon"] = oc.sum_horizon;
  j["horizon_ok"] = oc.horizon_ok;
  j["stationary_add"] = to_json(oc.stationary_add);
  j["sup_conditional_add"] = oc.sup_conditional_add;
  j["survival"] = oc.survival;
  nlohmann::ordered_json cond = nlohmann::ordered_json::array();
  for (const Estimate& e : oc.conditional_add) cond.push_back(to_json(e));
  j["conditional_add"] = std::move(cond);
  j["weights"] = oc.weights;
  return j;
}

nlohmann::ordered_json to_json(const ResidualTimeDist& dist) {
  return {{"mass", dist.mass}, {"n_reps", dist.n_reps}};
}

nlohmann::ordered_json to_json(const MixtureAddReport& report) {
  nlohmann::ordered_json j;
  j["mixture_add"] = to_json(report.mixture_add);
  j["first_add"] = to_json(report.first_add);
  j["second_add"] = to_json(report.second_add);
  j["b1"] = report.b1;
  j["b2"] = report.b2;
  j["predicted_add"] = report.predicted_add;
  j["predicted_add_se"] = report.predicted_add_se;
  j["covering_first_freq"] = report.covering_first_freq;
  j["covering_first_se"] = report.covering_first_se;
  j["predicted_first_freq"] = report.predicted_first_freq;
  return j;
}

nlohmann::ordered_json to_json(const ComparisonReport& report) {
  nlohmann::ordered_json j;
  j["target_arl"] = report.target_arl;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const RuleMetricsRow& row : report.rows) {
    nlohmann::ordered_json r;
    r["name"] = row.name;
    r["kind"] = to_string(row.rule.kind);
    r["threshold"] = row.rule.threshold;
    r["arl2fa"] = to_json(row.arl);
    r["integral_add"] = to_json(row.integral_add);
    r["stationary_add"] = to_json(row.stationary_add);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  j["flags"] = report.flags;
  j["note"] = report.note;
  return j;
}

std::string render_json(const nlohmann::ordered_json& j) {
  return j.dump(2) + "\n";
}

}  // namespace seqdet
