// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "wlansdn/scenario.hpp"

namespace wlansdn::run {

using json = nlohmann::json;

// Architecture under test. Proposed keeps user data off the control
// channel: the gateway tunnels it straight to the user-plane anchor.
// SplitMac hauls both control and data over one gateway-controller
// segment, with the controller node relaying data onward.
enum class Mode { Proposed, SplitMac };

const char* to_string(Mode m);
std::optional<Mode> mode_from_string(const std::string& s);

struct RunOptions {
  // Scales every traffic spec's rate. Zero silences all sources.
  double load_multiplier = 1.0;
  // Optional event sink: one {time_us, node, event_kind, detail} object
  // per noteworthy event, in simulation order.
  std::function<void(const json&)> trace;
};

inline constexpr int kReportSchema = 1;

// Simulates the scenario to its horizon and returns the metrics document
// (report schema 1). The same (scenario, mode, seed, options) always
// yields an identical document.
json run_scenario(const scn::Scenario& s, Mode mode, std::uint64_t seed,
                  const RunOptions& opts = {});

}  // namespace wlansdn::run
