#pragma once

#include <stdexcept>
#include <string>

namespace dnmfc {

// Invalid-input family: caller handed us something malformed. Maps to CLI exit 1.
struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidSpecError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Metric is mathematically undefined for the given inputs (e.g. one cluster).
struct UndefinedMetricError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Runtime family: inputs were fine, the computation failed. Maps to CLI exit 2.
struct DegenerateClusterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingFailureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dnmfc
