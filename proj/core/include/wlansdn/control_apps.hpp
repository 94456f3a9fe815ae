// SPDX-License-Identifier: Apache-2.0
#ifndef WLANSDN_CONTROL_APPS_HPP
#define WLANSDN_CONTROL_APPS_HPP

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wlansdn/domain.hpp"
#include "wlansdn/sim.hpp"

// Application functions hosted by the controller. Everything here is a
// pure function over view snapshots; the controller owns all side effects.
namespace wlansdn::apps {

struct HandoverPolicy {
  double hysteresis_db = 3.0;
  int consecutive_reports = 2;

  bool operator==(const HandoverPolicy&) const = default;
};

// One radio-signal epoch for one terminal: what it heard, and when.
struct RssiReport {
  std::int64_t time_us = 0;
  std::map<std::uint32_t, double> by_ap;
};

struct UeView {
  std::optional<std::uint32_t> serving_ap;
  std::deque<RssiReport> rssi_history;  // most recent last, at most 8 kept
};

inline constexpr std::size_t kRssiHistoryDepth = 8;

struct ApView {
  int channel = 1;
  std::size_t load = 0;
  std::set<std::uint32_t> neighbors;  // co-interfering radios
  MgmtPolicy policy;
  bool suppressing = false;  // admission app currently holds this radio shut
};

struct LbCandidate {
  std::uint32_t ap = 0;
  double rssi_dbm = 0;
  std::size_t load = 0;
};

// Least-loaded radio; ties go to the stronger signal, then the lower index.
// The order of the candidate list never matters.
std::optional<std::uint32_t> lb_select_ap(const std::vector<LbCandidate>& candidates);

struct PolicyIntent {
  std::uint32_t ap = 0;
  bool suppress = false;  // false restores the open policy
  int threshold = 0;      // meaningful when suppress is true
};

// Loaded radios stop answering probes; the gate reopens two terminals
// below the threshold so flapping loads do not flap the policy.
std::vector<PolicyIntent> admission_policy_update(
    const std::map<std::uint32_t, ApView>& aps, int threshold);

// A neighbour must beat the serving radio by the hysteresis margin in each
// of the last consecutive_reports epochs. Never returns the serving radio.
std::optional<std::uint32_t> ho_decide(const HandoverPolicy& policy,
                                       const UeView& ue);

struct ConflictGraph {
  std::set<std::uint32_t> nodes;
  std::set<std::pair<std::uint32_t, std::uint32_t>> edges;  // first < second

  void add_edge(std::uint32_t a, std::uint32_t b);
};

// Edge iff either radio hears the other at or above the association
// threshold (asymmetric positions take the stronger direction).
struct ApSite {
  std::uint32_t ap = 0;
  sim::Vec2 pos;
  double tx_power_dbm = 20.0;
};
ConflictGraph build_conflict_graph(const std::vector<ApSite>& sites);

int conflict_count(const ConflictGraph& g,
                   const std::map<std::uint32_t, int>& assignment);

// Conflict-minimal channel plan. At most ten radios get an exact search;
// larger graphs get a saturation-greedy pass. The result never has more
// conflicts than the current plan, and among equally good plans the one
// changing the fewest radios wins.
std::map<std::uint32_t, int> assign_channels(
    const ConflictGraph& g, const std::vector<int>& channels,
    const std::map<std::uint32_t, int>& current);

}  // namespace wlansdn::apps

#endif
