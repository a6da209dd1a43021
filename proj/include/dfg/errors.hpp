#pragma once

#include <stdexcept>
#include <string>

namespace dfg {

/// Caller supplied data that violates a precondition.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A self-check that can only fail through a bug or an insufficient schedule.
struct ConsistencyError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Linear solve or matrix-function evaluation missed its accuracy contract.
struct SolverError : std::runtime_error {
  SolverError(const std::string& what, double achieved)
      : std::runtime_error(what), residual(achieved) {}
  double residual;
};

}  // namespace dfg
