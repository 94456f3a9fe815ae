// SPDX-License-Identifier: Apache-2.0
#ifndef WLANSDN_DOMAIN_HPP
#define WLANSDN_DOMAIN_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace wlansdn {

// Only non-overlapping 2.4 GHz channels are valid anywhere in the system.
inline constexpr int kAllowedChannels[3] = {1, 6, 11};

bool channel_allowed(int ch);

enum class NodeKind : std::uint8_t { UE, AP, WAE, CONTROLLER, AMF, UPF, DN };

const char* to_string(NodeKind k);

// Stable identity of a simulated element: kind plus a per-kind index.
struct NodeId {
  NodeKind kind = NodeKind::UE;
  std::uint32_t index = 0;

  auto operator<=>(const NodeId&) const = default;

  // Text form "UE:3", "AP:0", ... used in logs, payloads and reports.
  std::string str() const;
  static std::optional<NodeId> parse(const std::string& text);
};

struct QosProfile {
  double rate_mbps = 10.0;
  int priority = 1;
  std::int64_t latency_budget_us = 20000;

  bool operator==(const QosProfile&) const = default;
};

// Management-plane knobs a controller pushes to one AP.
struct MgmtPolicy {
  // Probe responses are withheld once this many UEs are associated.
  int suppress_probe_above_load = 1000000;
  std::set<std::uint32_t> deny_list;

  bool operator==(const MgmtPolicy&) const = default;
};

struct ApState {
  std::uint32_t index = 0;
  int channel = 1;
  double tx_power_dbm = 20.0;
  std::set<std::uint32_t> associated;
  MgmtPolicy policy;
};

enum class UeState : std::uint8_t {
  IDLE,
  SCANNING,
  ASSOCIATING,
  AUTHENTICATING,
  REGISTERED,
  SESSION_ACTIVE,
  HANDOVER,
};

const char* to_string(UeState s);

enum class UeTrigger : std::uint8_t {
  PROBE_SENT,
  ASSOC_OK,
  AUTH_START,
  AUTH_OK,
  AUTH_FAIL,
  SESSION_OK,
  STEER,
  HO_DONE,
  DETACH,
};

const char* to_string(UeTrigger t);

// Optional data carried by a trigger; only the fields a given trigger
// consumes are looked at.
struct TransitionData {
  std::optional<std::uint32_t> ap;
  std::optional<std::uint64_t> tunnel_id;
  std::optional<std::uint32_t> wae;
};

class IllegalTransition : public std::runtime_error {
 public:
  IllegalTransition(UeState s, UeTrigger t);
  UeState state;
  UeTrigger trigger;
};

struct UeContext {
  std::uint32_t index = 0;
  UeState state = UeState::IDLE;
  std::optional<std::uint32_t> serving_ap;
  std::optional<std::uint64_t> tunnel_id;
  // Anchor gateway is fixed once a first session is created and survives
  // detach, so a re-attaching UE returns to the same anchor.
  std::optional<std::uint32_t> anchor_wae;
  int auth_attempts = 0;
};

// Applies one trigger to the context, mutating it in place.
// Throws IllegalTransition for any (state, trigger) pair not in the table.
void ue_transition(UeContext& ctx, UeTrigger trigger, const TransitionData& data = {});

// True when the per-state field invariants hold:
//   serving_ap set  iff state in {AUTHENTICATING, REGISTERED, SESSION_ACTIVE, HANDOVER}
//   tunnel_id set   iff state in {SESSION_ACTIVE, HANDOVER}
bool ue_invariants_hold(const UeContext& ctx);

}  // namespace wlansdn

#endif  // WLANSDN_DOMAIN_HPP
