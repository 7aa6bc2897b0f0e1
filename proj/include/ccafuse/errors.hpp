#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ccafuse {

/// Shapes that do not line up (row counts, column counts, empty inputs).
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Out-of-range hyperparameters or configuration values.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Caller broke a documented precondition (asymmetric input, stale tape, ...).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Optimization produced non-finite values or could not proceed.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-fatal diagnostics. Functions that can degrade gracefully accept an
/// optional sink and append human-readable messages to it.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

}  // namespace ccafuse
