// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "wlansdn/control_apps.hpp"
#include "wlansdn/data_plane.hpp"
#include "wlansdn/domain.hpp"
#include "wlansdn/fivegc.hpp"
#include "wlansdn/sim.hpp"

namespace wlansdn::scn {

using json = nlohmann::json;

// A scenario is the complete, self-contained description of one run:
// radio layout, wire plant, subscriber base, terminal behavior, app
// switches, initial slices, and timed operator actions. Document schema
// version is 1; loaders reject anything else.
inline constexpr int kScenarioSchema = 1;

struct ApSpec {
  sim::Vec2 pos{};
  int channel = 1;
  double tx_power_dbm = 20.0;

  bool operator==(const ApSpec&) const = default;
};

// Capacity/delay for one named segment of the wire plant. Roles:
//   wireless  per-AP air interface (each direction)
//   backhaul  AP <-> gateway
//   cmi       controller <-> gateway control channel; in splitmac mode this
//             same segment also carries tunneled user data
//   n2        gateway <-> AMF
//   n3        user-plane trunk toward the UPF
struct LinkSpec {
  double capacity_mbps = 100.0;
  std::int64_t delay_us = 100;

  bool operator==(const LinkSpec&) const = default;
};

struct TrafficSpec {
  enum class Kind { Cbr, OnOff };
  Kind kind = Kind::Cbr;
  bool downlink = false;
  double rate_mbps = 1.0;
  std::uint32_t packet_bytes = 1250;
  std::int64_t start_us = 0;
  std::int64_t stop_us = -1;  // -1: run to the scenario horizon
  std::string traffic_class = "default";
  // OnOff only.
  std::int64_t mean_on_us = 500000;
  std::int64_t mean_off_us = 500000;

  bool operator==(const TrafficSpec&) const = default;
};

struct Subscriber {
  fivegc::AuthKey key{};
  // The terminal holds a key that differs from the provisioned one, so
  // authentication must end in a reject.
  bool corrupt_key = false;
  QosProfile qos{};

  bool operator==(const Subscriber&) const = default;
};

struct UeBehavior {
  std::int64_t appear_us = 0;  // when the terminal powers on and scans
  std::vector<std::pair<std::int64_t, sim::Vec2>> waypoints;
  std::vector<TrafficSpec> traffic;

  bool operator==(const UeBehavior&) const = default;
};

struct AppsConfig {
  bool load_balancer = false;
  bool admission = false;
  int admission_threshold = 8;
  bool handover = false;
  apps::HandoverPolicy ho{};
  bool channel_mgmt = false;
  std::int64_t channel_period_us = 1000000;

  bool operator==(const AppsConfig&) const = default;
};

// A timed operator action applied through the controller's northbound
// interface. `op` is one of: slice_create, slice_update, slice_delete,
// push_config, steer_ue. `args` holds the op-specific fields.
struct Directive {
  std::int64_t time_us = 0;
  std::string op;
  json args = json::object();

  bool operator==(const Directive&) const = default;
};

struct Scenario {
  std::string name = "scenario";
  std::int64_t duration_us = 1000000;
  std::uint64_t seed = 1;

  std::vector<ApSpec> aps;
  sim::Vec2 wae_pos{};
  std::map<std::string, LinkSpec> links;  // missing roles get defaults

  std::vector<Subscriber> subscribers;   // index is the terminal id
  std::vector<UeBehavior> behaviors;     // index is the terminal id
  std::vector<dp::SliceDef> slices;      // installed via the controller at t=0
  std::vector<Directive> directives;

  AppsConfig apps;
  // Per-AP association preference in dB, added by terminals when ranking
  // probe responses. Models vendor steering hints.
  std::map<std::uint32_t, double> assoc_bias_db;

  std::int64_t stats_period_us = 200000;
  std::int64_t audit_period_us = 10000;

  bool operator==(const Scenario&) const = default;
};

// Malformed JSON text: where and why the parse stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, std::string reason);
  int line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  int line_;
  std::string reason_;
};

// Well-formed JSON that is not a usable scenario. Carries every problem
// found, not just the first.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// All validation problems in `doc`, empty when it is a valid scenario.
std::vector<std::string> scenario_problems(const json& doc);

// Slice template <-> JSON, shared by scenario documents and directives.
dp::SliceDef slice_from_json(const json& j);
json slice_to_json(const dp::SliceDef& s);

// Strict load: throws ValidationError unless scenario_problems() is empty.
Scenario scenario_from_json(const json& doc);

// Inverse of scenario_from_json: emitted documents reload to an equal
// Scenario and carry every field explicitly.
json scenario_to_json(const Scenario& s);

// Parse JSON text then load. Throws ParseError or ValidationError.
Scenario load_scenario(const std::string& text);

LinkSpec link_or_default(const Scenario& s, const std::string& role);

}  // namespace wlansdn::scn
