#pragma once

#include <string>
#include <string_view>

#include "routeemu/link_emulator.hpp"
#include "routeemu/trace_model.hpp"

namespace routeemu {

/// Shell script replaying a scenario with tc: a tbf rate shaper at the root
/// and a netem delay/jitter/loss stage below it, re-tuned once per row.
/// Output is byte-deterministic.
std::string emit_tc_script(const Scenario& s, std::string_view interface_name,
                           const LinkConfig& link = {});

}  // namespace routeemu
