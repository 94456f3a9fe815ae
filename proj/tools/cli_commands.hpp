// SPDX-License-Identifier: Apache-2.0
#ifndef WLANSDN_CLI_COMMANDS_HPP
#define WLANSDN_CLI_COMMANDS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wlansdn/runner.hpp"
#include "wlansdn/scenario.hpp"

namespace wlansdn::cli {

// Exit codes shared by every command: 0 success, 2 scenario rejected
// (parse or validation), 3 runtime failure (a run threw, a digest did
// not match, report files could not be written).
inline constexpr int kExitOk = 0;
inline constexpr int kExitBadScenario = 2;
inline constexpr int kExitRuntime = 3;

struct RunArgs {
  std::string scenario_path;
  std::string mode = "proposed";
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

struct SweepArgs {
  std::string scenario_path;
  std::vector<std::string> modes = {"proposed", "splitmac"};
  std::vector<double> loads = {0.0, 0.25, 0.5, 0.75, 0.9, 1.2};
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

struct ReplayArgs {
  std::string scenario_path;
  // Directory holding the report.json a previous `run` produced.
  std::string out_dir = ".";
};

// Reads and validates a scenario file; on failure prints every problem to
// `err` and returns nothing.
std::optional<scn::Scenario> load_scenario_file(const std::string& path,
                                                std::ostream& err);

int cmd_validate(const std::string& scenario_path, std::ostream& out,
                 std::ostream& err);
int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err);
int cmd_replay(const ReplayArgs& a, std::ostream& out, std::ostream& err);

// Flat projection of a report document: header row, then one
// "metric,value" row per leaf, keyed by JSON pointer. Value cells are
// JSON scalar dumps, so CSV and JSON agree on every shared value by
// construction.
std::string report_to_csv(const nlohmann::json& report);

}  // namespace wlansdn::cli

#endif  // WLANSDN_CLI_COMMANDS_HPP
