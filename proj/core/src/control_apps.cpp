// SPDX-License-Identifier: Apache-2.0
#include "wlansdn/control_apps.hpp"

#include <algorithm>

namespace wlansdn::apps {

std::optional<std::uint32_t> lb_select_ap(
    const std::vector<LbCandidate>& candidates) {
  if (candidates.empty()) return std::nullopt;
  const LbCandidate* best = &candidates[0];
  for (const LbCandidate& c : candidates) {
    if (c.load < best->load ||
        (c.load == best->load && c.rssi_dbm > best->rssi_dbm) ||
        (c.load == best->load && c.rssi_dbm == best->rssi_dbm &&
         c.ap < best->ap)) {
      best = &c;
    }
  }
  return best->ap;
}

std::vector<PolicyIntent> admission_policy_update(
    const std::map<std::uint32_t, ApView>& aps, int threshold) {
  std::vector<PolicyIntent> intents;
  for (const auto& [id, ap] : aps) {
    if (!ap.suppressing && ap.load >= static_cast<std::size_t>(threshold)) {
      intents.push_back({id, true, threshold});
    } else if (ap.suppressing &&
               static_cast<int>(ap.load) < threshold - 2) {
      intents.push_back({id, false, 0});
    }
  }
  return intents;
}

std::optional<std::uint32_t> ho_decide(const HandoverPolicy& policy,
                                       const UeView& ue) {
  if (!ue.serving_ap) return std::nullopt;
  const std::size_t k = static_cast<std::size_t>(policy.consecutive_reports);
  if (ue.rssi_history.size() < k) return std::nullopt;
  const std::uint32_t serving = *ue.serving_ap;
  const RssiReport& latest = ue.rssi_history.back();

  std::optional<std::uint32_t> best;
  double best_rssi = 0;
  for (const auto& [ap, rssi_now] : latest.by_ap) {
    if (ap == serving) continue;
    bool qualifies = true;
    for (std::size_t i = ue.rssi_history.size() - k;
         i < ue.rssi_history.size(); ++i) {
      const RssiReport& r = ue.rssi_history[i];
      auto s = r.by_ap.find(serving);
      auto c = r.by_ap.find(ap);
      if (s == r.by_ap.end() || c == r.by_ap.end() ||
          !(c->second > s->second + policy.hysteresis_db)) {
        qualifies = false;
        break;
      }
    }
    if (!qualifies) continue;
    if (!best || rssi_now > best_rssi || (rssi_now == best_rssi && ap < *best)) {
      best = ap;
      best_rssi = rssi_now;
    }
  }
  return best;
}

void ConflictGraph::add_edge(std::uint32_t a, std::uint32_t b) {
  if (a == b) return;
  edges.emplace(std::min(a, b), std::max(a, b));
  nodes.insert(a);
  nodes.insert(b);
}

ConflictGraph build_conflict_graph(const std::vector<ApSite>& sites) {
  ConflictGraph g;
  for (const ApSite& s : sites) g.nodes.insert(s.ap);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t j = i + 1; j < sites.size(); ++j) {
      double d = sim::distance_m(sites[i].pos, sites[j].pos);
      double heard = std::max(sim::rssi_dbm(sites[i].tx_power_dbm, d),
                              sim::rssi_dbm(sites[j].tx_power_dbm, d));
      if (heard >= sim::kAssocThresholdDbm) g.add_edge(sites[i].ap, sites[j].ap);
    }
  }
  return g;
}

int conflict_count(const ConflictGraph& g,
                   const std::map<std::uint32_t, int>& assignment) {
  int conflicts = 0;
  for (const auto& [a, b] : g.edges) {
    auto ia = assignment.find(a);
    auto ib = assignment.find(b);
    if (ia != assignment.end() && ib != assignment.end() &&
        ia->second == ib->second) {
      ++conflicts;
    }
  }
  return conflicts;
}

namespace {

int channel_of(const std::map<std::uint32_t, int>& m, std::uint32_t ap,
               int fallback) {
  auto it = m.find(ap);
  return it == m.end() ? fallback : it->second;
}

std::map<std::uint32_t, int> exact_plan(const ConflictGraph& g,
                                        const std::vector<int>& channels,
                                        const std::map<std::uint32_t, int>& current) {
  std::vector<std::uint32_t> nodes(g.nodes.begin(), g.nodes.end());
  const std::size_t n = nodes.size();
  std::vector<int> trial(n, 0);  // channel indices
  std::vector<int> best_trial;
  int best_conflicts = 0;
  int best_changes = 0;
  bool have_best = false;

  auto evaluate = [&] {
    std::map<std::uint32_t, int> a;
    int changes = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a[nodes[i]] = channels[static_cast<std::size_t>(trial[i])];
      if (a[nodes[i]] != channel_of(current, nodes[i], channels[0])) ++changes;
    }
    int conflicts = conflict_count(g, a);
    if (!have_best || conflicts < best_conflicts ||
        (conflicts == best_conflicts && changes < best_changes) ||
        (conflicts == best_conflicts && changes == best_changes &&
         trial < best_trial)) {
      have_best = true;
      best_conflicts = conflicts;
      best_changes = changes;
      best_trial = trial;
    }
  };

  // Odometer over channels^n; n is at most ten so this stays instant.
  while (true) {
    evaluate();
    std::size_t i = 0;
    while (i < n && ++trial[i] == static_cast<int>(channels.size())) {
      trial[i] = 0;
      ++i;
    }
    if (i == n) break;
  }

  std::map<std::uint32_t, int> plan = current;
  for (std::size_t i = 0; i < n; ++i) {
    plan[nodes[i]] = channels[static_cast<std::size_t>(best_trial[i])];
  }
  return plan;
}

std::map<std::uint32_t, int> greedy_plan(const ConflictGraph& g,
                                         const std::vector<int>& channels,
                                         const std::map<std::uint32_t, int>& current) {
  std::map<std::uint32_t, std::set<std::uint32_t>> adj;
  for (const auto& [a, b] : g.edges) {
    adj[a].insert(b);
    adj[b].insert(a);
  }
  std::vector<std::uint32_t> order(g.nodes.begin(), g.nodes.end());
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    std::size_t da = adj[a].size(), db = adj[b].size();
    return da != db ? da > db : a < b;
  });

  std::map<std::uint32_t, int> plan = current;
  std::set<std::uint32_t> placed;
  for (std::uint32_t node : order) {
    int keep = channel_of(current, node, channels[0]);
    int best_ch = keep;
    int best_cost = -1;
    for (int ch : channels) {
      int cost = 0;
      for (std::uint32_t nb : adj[node]) {
        if (placed.count(nb) && plan[nb] == ch) ++cost;
      }
      if (best_cost < 0 || cost < best_cost ||
          (cost == best_cost && ch == keep && best_ch != keep)) {
        best_cost = cost;
        best_ch = ch;
      }
    }
    plan[node] = best_ch;
    placed.insert(node);
  }
  return plan;
}

}  // namespace

std::map<std::uint32_t, int> assign_channels(
    const ConflictGraph& g, const std::vector<int>& channels,
    const std::map<std::uint32_t, int>& current) {
  if (g.nodes.empty() || channels.empty()) return current;
  std::map<std::uint32_t, int> plan = g.nodes.size() <= 10
                                          ? exact_plan(g, channels, current)
                                          : greedy_plan(g, channels, current);
  // Keeping the old plan is always on the table.
  if (conflict_count(g, plan) >= conflict_count(g, current)) return current;
  return plan;
}

}  // namespace wlansdn::apps
