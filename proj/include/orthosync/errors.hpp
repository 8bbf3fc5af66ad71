#pragma once

#include <stdexcept>

namespace orthosync {

// Error conditions surfaced by the library. Messages carry the offending
// block index or parameter value where applicable.

struct RankDeficientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidDimsError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidSigmaError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NoConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HessianNotPdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotInDomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidProbabilityError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SampleTooSmallError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DegenerateFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptySelectionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace orthosync
