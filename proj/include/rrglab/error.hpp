#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rrg {

enum class ErrorKind {
  // input / validation
  OddDegreeSum,
  InfeasibleDegree,
  TooLarge,
  EdgeNotPresent,
  InvalidSwitching,
  InvalidArgument,
  DirectionNotOrthogonal,
  BadSupport,
  EmptySample,
  UnknownTestFunction,
  TimeOutOfRange,
  CouplingOutOfRange,
  BadColumns,
  ParseError,
  ValidationError,
  // numeric
  RetryBudgetExceeded,
  NoConvergence,
  SolveFailure,
  BranchUndefined,
  DegenerateSample,
  DegenerateFit,
  DegenerateEigenvalue,
  ExcessDegeneracy,
  // environment
  IoError,
  Interrupted,
};

std::string_view to_string(ErrorKind kind);

/// Process exit code for a failure of this kind: 2 validation, 3 numeric, 4 I/O.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace rrg
