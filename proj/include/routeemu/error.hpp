#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace routeemu {

enum class ErrorKind {
  malformed_row,
  empty_trace,
  duplicate_timestamp,
  non_uniform_grid,
  range_violation,
  grid_violation,
  empty_input,
  grid_mismatch,
  time_regression,
  scenario_mismatch,
  bind_failure,
  invalid_transition,
  interval_mismatch,
  session_not_found,
  invalid_argument,
  io_failure,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; `kind()` carries the contract error name.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace routeemu
