#include "routeemu/error.hpp"

namespace routeemu {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::malformed_row: return "MalformedRow";
    case ErrorKind::empty_trace: return "EmptyTrace";
    case ErrorKind::duplicate_timestamp: return "DuplicateTimestamp";
    case ErrorKind::non_uniform_grid: return "NonUniformGrid";
    case ErrorKind::range_violation: return "RangeViolation";
    case ErrorKind::grid_violation: return "GridViolation";
    case ErrorKind::empty_input: return "EmptyInput";
    case ErrorKind::grid_mismatch: return "GridMismatch";
    case ErrorKind::time_regression: return "TimeRegression";
    case ErrorKind::scenario_mismatch: return "ScenarioMismatch";
    case ErrorKind::bind_failure: return "BindFailure";
    case ErrorKind::invalid_transition: return "InvalidTransition";
    case ErrorKind::interval_mismatch: return "IntervalMismatch";
    case ErrorKind::session_not_found: return "SessionNotFound";
    case ErrorKind::invalid_argument: return "InvalidArgument";
    case ErrorKind::io_failure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace routeemu
