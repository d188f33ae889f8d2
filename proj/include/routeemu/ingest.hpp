#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "routeemu/error.hpp"
#include "routeemu/trace_model.hpp"

namespace routeemu {

struct ParseIssue {
  ErrorKind kind = ErrorKind::malformed_row;
  std::size_t line = 0;
  std::string reason;
};

template <typename Sample>
struct TraceScan {
  std::vector<Sample> samples;
  std::vector<ParseIssue> issues;        // one per rejected data line
  std::vector<ParseIssue> trace_issues;  // whole-trace problems (empty, grid)
  std::size_t data_lines = 0;

  bool ok() const { return issues.empty() && trace_issues.empty(); }
};

// Lenient scans: every data line ends up either in `samples` or in `issues`.
TraceScan<PositionSample> scan_position_csv(std::string_view text);
TraceScan<NetSample> scan_net_csv(std::string_view text);

/// Thrown by the strict parsers; what() and kind() describe the first issue.
/// Timestamps are kept as given: both traces of one drive share its epoch.
class ParseError : public Error {
 public:
  explicit ParseError(std::vector<ParseIssue> issues);
  const std::vector<ParseIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ParseIssue> issues_;
};

std::vector<PositionSample> parse_position_csv(std::string_view text);
std::vector<NetSample> parse_net_csv(std::string_view text);

std::string write_scenario_csv(const Scenario& s);
Scenario read_scenario_csv(std::string_view text, std::string path_id = {});

/// Throughput printed as kbps: integral when exact, otherwise three decimals.
std::string format_kbps(std::int64_t bps);
std::int64_t parse_kbps(std::string_view field);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace routeemu
