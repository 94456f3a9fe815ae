// SPDX-License-Identifier: Apache-2.0
#include "wlansdn/wae.hpp"

namespace wlansdn::dp {

sim::Packet AccessPoint::make_mgmt(NodeId dst, json meta) const {
  sim::Packet p;
  p.id = alloc_id_ ? alloc_id_() : 0;
  p.cls = sim::PacketClass::MGMT;
  p.src = NodeId{NodeKind::AP, index_};
  p.dst = dst;
  p.size_bytes = sim::kMgmtFrameBytes;
  p.meta = std::move(meta);
  return p;
}

void AccessPoint::on_from_ue(sim::Packet&& p) {
  if (p.cls == sim::PacketClass::MGMT && p.dst == NodeId{NodeKind::AP, index_}) {
    handle_mgmt_from_ue(p.meta);
    return;
  }
  // Anything else rides the backhaul, but only for associated terminals.
  if (!associated_.count(p.ue)) {
    not_associated_drops += 1;
    return;
  }
  if (send_to_wae_) send_to_wae_(std::move(p));
}

void AccessPoint::handle_mgmt_from_ue(const json& meta) {
  const std::string kind = meta.value("kind", "");
  std::uint32_t ue = meta.value("ue", 0u);
  if (kind == "PROBE_REQ") {
    if (load() >= static_cast<std::size_t>(policy_.suppress_probe_above_load) ||
        policy_.deny_list.count(ue)) {
      probes_suppressed += 1;
      return;
    }
    if (send_to_ue_) {
      send_to_ue_(ue, make_mgmt(NodeId{NodeKind::UE, ue},
                                {{"kind", "PROBE_RESP"},
                                 {"ap", index_},
                                 {"channel", channel_}}));
    }
    return;
  }
  if (kind == "ASSOC_REQ") {
    bool ok = !policy_.deny_list.count(ue) && associated_.size() < kMaxAssociated;
    if (ok) associated_.insert(ue);
    else assoc_denied += 1;
    if (send_to_ue_) {
      send_to_ue_(ue, make_mgmt(NodeId{NodeKind::UE, ue},
                                {{"kind", "ASSOC_RESP"},
                                 {"ap", index_},
                                 {"ok", ok}}));
    }
    if (ok && send_to_wae_) {
      send_to_wae_(make_mgmt(NodeId{NodeKind::WAE, 0},
                             {{"kind", "ASSOC_IND"}, {"ue", ue}, {"ap", index_}}));
    }
    return;
  }
  if (kind == "DISASSOC") {
    if (associated_.erase(ue) && send_to_wae_) {
      send_to_wae_(make_mgmt(NodeId{NodeKind::WAE, 0},
                             {{"kind", "DISASSOC_IND"}, {"ue", ue}, {"ap", index_}}));
    }
    return;
  }
}

void AccessPoint::on_from_wae(sim::Packet&& p) {
  if (p.cls == sim::PacketClass::MGMT && p.dst == NodeId{NodeKind::AP, index_}) {
    handle_mgmt_from_wae(p.meta);
    return;
  }
  // Downlink delivery; the radio only talks to associated terminals.
  if (p.dst.kind == NodeKind::UE) {
    std::uint32_t ue = p.dst.index;
    if (!associated_.count(ue)) {
      not_associated_drops += 1;
      return;
    }
    if (send_to_ue_) send_to_ue_(ue, std::move(p));
  }
}

void AccessPoint::handle_mgmt_from_wae(const json& meta) {
  const std::string kind = meta.value("kind", "");
  if (kind == "CONFIG") {
    std::uint64_t corr = meta.value("corr", 0ull);
    bool ok = true;
    std::string detail;
    if (meta.contains("channel")) {
      int ch = meta["channel"].get<int>();
      if (channel_allowed(ch)) {
        channel_ = ch;
      } else {
        ok = false;
        detail = "channel not allowed";
      }
    }
    if (ok && meta.contains("tx_power_dbm")) {
      tx_power_dbm_ = meta["tx_power_dbm"].get<double>();
    }
    if (ok && meta.contains("suppress_probe_above_load")) {
      policy_.suppress_probe_above_load =
          meta["suppress_probe_above_load"].get<int>();
    }
    if (ok && meta.contains("deny_list")) {
      policy_.deny_list.clear();
      for (const auto& v : meta["deny_list"]) {
        policy_.deny_list.insert(v.get<std::uint32_t>());
      }
    }
    if (send_to_wae_) {
      json applied = {{"kind", "CONFIG_APPLIED"},
                      {"corr", corr},
                      {"ap", index_},
                      {"ok", ok}};
      if (!ok) applied["detail"] = detail;
      send_to_wae_(make_mgmt(NodeId{NodeKind::WAE, 0}, std::move(applied)));
    }
    return;
  }
  if (kind == "STEER") {
    std::uint32_t ue = meta.value("ue", 0u);
    std::uint32_t target = meta.value("target_ap", 0u);
    if (!associated_.count(ue)) return;
    // Hint first, then cut: the hint frame is queued to the terminal
    // before the association state flips.
    if (send_to_ue_) {
      send_to_ue_(ue, make_mgmt(NodeId{NodeKind::UE, ue},
                                {{"kind", "DISASSOC_HINT"},
                                 {"ue", ue},
                                 {"target_ap", target}}));
    }
    associated_.erase(ue);
    if (send_to_wae_) {
      send_to_wae_(make_mgmt(NodeId{NodeKind::WAE, 0},
                             {{"kind", "DISASSOC_IND"}, {"ue", ue}, {"ap", index_}}));
    }
    return;
  }
}

}  // namespace wlansdn::dp
