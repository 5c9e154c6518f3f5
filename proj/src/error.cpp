#include "rrglab/error.hpp"

namespace rrg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OddDegreeSum: return "OddDegreeSum";
    case ErrorKind::InfeasibleDegree: return "InfeasibleDegree";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::EdgeNotPresent: return "EdgeNotPresent";
    case ErrorKind::InvalidSwitching: return "InvalidSwitching";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DirectionNotOrthogonal: return "DirectionNotOrthogonal";
    case ErrorKind::BadSupport: return "BadSupport";
    case ErrorKind::EmptySample: return "EmptySample";
    case ErrorKind::UnknownTestFunction: return "UnknownTestFunction";
    case ErrorKind::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorKind::CouplingOutOfRange: return "CouplingOutOfRange";
    case ErrorKind::BadColumns: return "BadColumns";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::RetryBudgetExceeded: return "RetryBudgetExceeded";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SolveFailure: return "SolveFailure";
    case ErrorKind::BranchUndefined: return "BranchUndefined";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::DegenerateEigenvalue: return "DegenerateEigenvalue";
    case ErrorKind::ExcessDegeneracy: return "ExcessDegeneracy";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::Interrupted: return "Interrupted";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RetryBudgetExceeded:
    case ErrorKind::NoConvergence:
    case ErrorKind::SolveFailure:
    case ErrorKind::BranchUndefined:
    case ErrorKind::DegenerateSample:
    case ErrorKind::DegenerateFit:
    case ErrorKind::DegenerateEigenvalue:
    case ErrorKind::ExcessDegeneracy:
    case ErrorKind::Interrupted:
      return 3;
    case ErrorKind::IoError:
      return 4;
    default:
      return 2;
  }
}

void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace rrg
