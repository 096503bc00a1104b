#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "seqdet/calibration.hpp"
#include "seqdet/metrics.hpp"

#include <json.hpp>

namespace seqdet {

// 17 significant digits: enough to round-trip an IEEE-754 double, so two runs
// agree byte-for-byte exactly when the computed values agree bit-for-bit.
std::string fmt_real(double v);

// One CSV row of the fixed metrics schema
//   rule,metric,k,estimate,std_err,n_reps,seed
// with k left empty for scalar metrics.
struct CsvRow {
  std::string rule;
  std::string metric;
  std::optional<std::uint64_t> k;
  double estimate = 0.0;
  double std_err = 0.0;
  std::uint64_t n_reps = 0;
  std::uint64_t seed = 0;
};

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out);
  void row(const CsvRow& r);

 private:
  std::ostream& out_;
};

nlohmann::ordered_json to_json(const Estimate& e);
nlohmann::ordered_json to_json(const ArlEstimate& e);
nlohmann::ordered_json to_json(const CalibrationResult& r);
nlohmann::ordered_json to_json(const OperatingCharacteristics& oc);
nlohmann::ordered_json to_json(const ResidualTimeDist& dist);
nlohmann::ordered_json to_json(const MixtureAddReport& report);
nlohmann::ordered_json to_json(const ComparisonReport& report);

// Serialized with 2-space indentation and a trailing newline. Doubles are
// serialized shortest-round-trip, so byte-identical output follows from
// bit-identical values.
std::string render_json(const nlohmann::ordered_json& j);

}  // namespace seqdet
