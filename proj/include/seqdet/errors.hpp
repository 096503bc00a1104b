#pragma once

#include <stdexcept>

namespace seqdet {

// The model family cannot do what was asked (e.g. exact path enumeration of a
// continuous-support family).
struct UnsupportedModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Threshold search failed, or its Monte Carlo backing is unreliable
// (truncated runs, non-monotone bracket).
struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An estimator's sample-side preconditions failed (e.g. the acceptance rate
// of a conditional estimate fell below the usable floor).
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rules handed to a comparison are not on a common footing.
struct ComparisonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Experiment configuration is malformed; maps to a usage error at the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace seqdet
