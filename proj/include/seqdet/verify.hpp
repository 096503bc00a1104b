#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace seqdet {

enum class VerifyProfile { quick, full };

VerifyProfile verify_profile_from_string(const std::string& s);
std::string to_string(VerifyProfile profile);

struct CheckResult {
  std::string id;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  VerifyProfile profile = VerifyProfile::quick;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

// Runs the numerical self-checks. `quick` sticks to exact enumeration oracles
// and the small bernoulli model (seconds); `full` adds the Monte Carlo
// acceptance checks on the calibrated gaussian/exponential configurations
// (minutes). threads = 0 uses all cores; the results are identical for every
// thread count by construction.
VerifyReport run_verify(VerifyProfile profile, std::uint64_t seed,
                        unsigned threads);

// One line per check ("PASS <id> <detail>") plus a RESULT summary line.
// Deliberately free of timings, thread counts, and host details: reports from
// the same seed must be byte-identical however the work was scheduled.
std::string format_verify_report(const VerifyReport& report);

}  // namespace seqdet
