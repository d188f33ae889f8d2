#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "routeemu/orchestrator.hpp"
#include "routeemu/report.hpp"

namespace routeemu {

nlohmann::json to_json(const CorrectionParams& p);
CorrectionParams correction_params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CorrectionInterval& i);
nlohmann::json to_json(std::span<const CorrectionInterval> intervals);
std::vector<CorrectionInterval> intervals_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LinkParams& p);
nlohmann::json to_json(const ProbeReport& r);
nlohmann::json to_json(const ReplayState& s);
nlohmann::json to_json(const ApiEvent& e);
nlohmann::json to_json(const ComparisonResult& r);

ControlCommand control_command_from_json(const nlohmann::json& j);

}  // namespace routeemu
