// SPDX-License-Identifier: Apache-2.0
#include "wlansdn/wae.hpp"

namespace wlansdn::dp {

using cmi::CmiMessage;
using cmi::MsgType;

Wae::Wae(Mode mode, std::uint32_t wae_id, std::uint32_t ap_count)
    : mode_(mode),
      wae_id_(wae_id),
      ap_count_(ap_count),
      session_(cmi::CmiSession::Config{.role = cmi::CmiSession::Role::Agent,
                                       .controller_id = "",
                                       .wae_id = wae_id,
                                       .ap_count = ap_count}) {}

std::optional<std::uint32_t> Wae::serving_ap(std::uint32_t ue) const {
  auto it = serving_.find(ue);
  if (it == serving_.end()) return std::nullopt;
  return it->second;
}

void Wae::send_frame(std::vector<std::uint8_t>&& bytes) {
  if (send_cmi_) send_cmi_(std::move(bytes));
}

void Wae::reply(MsgType type, json payload, std::uint64_t corr) {
  send_frame(session_.encode(type, std::move(payload), corr));
}

void Wae::reply_error(std::uint64_t corr, const std::string& code,
                      const std::string& detail) {
  reply(MsgType::ERROR, {{"code", code}, {"detail", detail}}, corr);
}

void Wae::flow_ack(std::uint64_t corr, std::uint64_t rule_id, bool ok,
                   const std::string& detail) {
  json payload = {{"rule_id", rule_id}, {"ok", ok}};
  if (!detail.empty()) payload["detail"] = detail;
  reply(MsgType::FLOW_ACK, std::move(payload), corr);
}

sim::Packet Wae::make_mgmt(NodeId dst, json meta) const {
  sim::Packet p;
  p.id = alloc_id_ ? alloc_id_() : 0;
  p.cls = sim::PacketClass::MGMT;
  p.src = NodeId{NodeKind::WAE, wae_id_};
  p.dst = dst;
  p.size_bytes = sim::kMgmtFrameBytes;
  p.meta = std::move(meta);
  return p;
}

void Wae::on_cmi_bytes(std::span<const std::uint8_t> bytes) {
  auto outcome = session_.on_bytes(bytes);
  for (auto& f : outcome.to_send) send_frame(std::move(f));
  counters_.ctrl_errors_seen += outcome.decode_errors.size();
  for (const CmiMessage& msg : outcome.delivered) handle_msg(msg);
}

void Wae::handle_msg(const CmiMessage& msg) {
  const json& p = msg.payload;
  const std::uint64_t corr = msg.correlation_id;
  switch (msg.type) {
    case MsgType::FLOW_ADD: {
      std::uint32_t ap = p.value("ap", 0u);
      if (ap >= ap_count_) {
        reply_error(corr, "UNKNOWN_AP", "flow names a radio that does not exist");
        return;
      }
      FlowRule rule;
      rule.rule_id = p.value("rule_id", 0ull);
      rule.ue = p.value("ue", 0u);
      rule.traffic_class = p.value("traffic_class", "default");
      rule.ap = ap;
      if (p.contains("out")) {
        std::string out = p["out"].get<std::string>();
        if (out.rfind("N3:", 0) == 0) {
          rule.tunnel_id = std::stoull(out.substr(3));
        }
      }
      rule.qos.rate_mbps = p.value("rate_mbps", rule.qos.rate_mbps);
      rule.qos.priority = static_cast<int>(p.value("priority", 1u));
      rule.qos.latency_budget_us =
          static_cast<std::int64_t>(p.value("latency_budget_us", 20000ull));
      rule.slice_id = p.value("slice_id", "");
      std::uint32_t ue = rule.ue;
      std::string tc = rule.traffic_class;
      double rate = rule.qos.rate_mbps;
      if (!flows_.add(std::move(rule))) {
        flow_ack(corr, p.value("rule_id", 0ull), false, "duplicate rule");
        return;
      }
      if (flow_rate_apply_) flow_rate_apply_(ue, tc, rate);
      flow_ack(corr, p.value("rule_id", 0ull), true);
      return;
    }
    case MsgType::FLOW_MOD: {
      std::uint64_t rule_id = p.value("rule_id", 0ull);
      const FlowRule* existing = flows_.by_id(rule_id);
      if (!existing) {
        reply_error(corr, "UNKNOWN_RULE", "no such rule to modify");
        return;
      }
      FlowRule updated = *existing;
      if (p.contains("ue")) updated.ue = p["ue"].get<std::uint32_t>();
      if (p.contains("traffic_class")) {
        updated.traffic_class = p["traffic_class"].get<std::string>();
      }
      if (p.contains("ap")) {
        std::uint32_t ap = p["ap"].get<std::uint32_t>();
        if (ap >= ap_count_) {
          reply_error(corr, "UNKNOWN_AP", "flow names a radio that does not exist");
          return;
        }
        updated.ap = ap;
      }
      if (p.contains("out")) {
        std::string out = p["out"].get<std::string>();
        if (out.rfind("N3:", 0) == 0) updated.tunnel_id = std::stoull(out.substr(3));
      }
      if (p.contains("rate_mbps")) updated.qos.rate_mbps = p["rate_mbps"].get<double>();
      if (p.contains("priority")) {
        updated.qos.priority = static_cast<int>(p["priority"].get<std::uint32_t>());
      }
      if (p.contains("latency_budget_us")) {
        updated.qos.latency_budget_us =
            static_cast<std::int64_t>(p["latency_budget_us"].get<std::uint64_t>());
      }
      if (p.contains("slice_id")) updated.slice_id = p["slice_id"].get<std::string>();
      if (!flows_.mod(rule_id, updated)) {
        flow_ack(corr, rule_id, false, "rule key collision");
        return;
      }
      if (flow_rate_apply_) {
        flow_rate_apply_(updated.ue, updated.traffic_class, updated.qos.rate_mbps);
      }
      flow_ack(corr, rule_id, true);
      return;
    }
    case MsgType::FLOW_DEL: {
      std::uint64_t rule_id = p.value("rule_id", 0ull);
      const FlowRule* existing = flows_.by_id(rule_id);
      if (!existing) {
        reply_error(corr, "UNKNOWN_RULE", "no such rule to delete");
        return;
      }
      if (flow_rate_apply_) {
        flow_rate_apply_(existing->ue, existing->traffic_class, 0);
      }
      flows_.del(rule_id);
      flow_ack(corr, rule_id, true);
      return;
    }
    case MsgType::CONFIG_SET:
    case MsgType::CHANNEL_SET:
    case MsgType::MGMT_POLICY_SET: {
      std::uint32_t ap = p.value("ap", 0u);
      if (ap >= ap_count_) {
        reply_error(corr, "UNKNOWN_AP", "no such radio");
        return;
      }
      json cmd = {{"kind", "CONFIG"}, {"corr", corr}};
      if (p.contains("channel")) cmd["channel"] = p["channel"];
      if (p.contains("tx_power_dbm")) cmd["tx_power_dbm"] = p["tx_power_dbm"];
      if (p.contains("suppress_probe_above_load")) {
        cmd["suppress_probe_above_load"] = p["suppress_probe_above_load"];
      }
      if (p.contains("deny_list")) cmd["deny_list"] = p["deny_list"];
      pending_ap_ops_[corr] = ap;
      if (send_to_ap_) {
        send_to_ap_(ap, make_mgmt(NodeId{NodeKind::AP, ap}, std::move(cmd)));
      }
      return;
    }
    case MsgType::CONFIG_GET: {
      if (p.value("what", "") == "flows") {
        json flows = json::array();
        for (const auto& [id, rule] : flows_.rules()) flows.push_back(id);
        reply(MsgType::CONFIG_ACK,
              {{"ok", true}, {"what", "flows"}, {"flows", flows}}, corr);
      } else {
        reply(MsgType::CONFIG_ACK, {{"ok", false}, {"detail", "unknown query"}},
              corr);
      }
      return;
    }
    case MsgType::UE_STEER: {
      std::uint32_t ue = p.value("ue", 0u);
      std::uint32_t target = p.value("target_ap", 0u);
      if (target >= ap_count_) {
        reply_error(corr, "UNKNOWN_AP", "steer target does not exist");
        return;
      }
      auto it = serving_.find(ue);
      if (it == serving_.end() || it->second == target || ho_.count(ue)) {
        counters_.steer_ignored += 1;
        return;
      }
      HoState ho;
      ho.from_ap = it->second;
      ho.to_ap = target;
      ho_.emplace(ue, std::move(ho));
      if (send_to_ap_) {
        send_to_ap_(it->second,
                    make_mgmt(NodeId{NodeKind::AP, it->second},
                              {{"kind", "STEER"}, {"ue", ue}, {"target_ap", target}}));
      }
      return;
    }
    case MsgType::SLICE_CREATE: {
      std::string id = p.value("slice_id", "");
      if (id.empty() || id == kDefaultSliceId || slices_.count(id)) {
        reply_error(corr, "BAD_SLICE", "slice id is taken or reserved");
        return;
      }
      SliceDef def;
      def.id = id;
      def.weight = std::max(1u, p.value("weight", 1u));
      def.rate_cap_mbps = p.value("rate_cap_mbps", 0.0);
      for (const auto& v : p.value("ues", json::array())) {
        def.ues.insert(v.get<std::uint32_t>());
      }
      for (const auto& v : p.value("traffic_classes", json::array())) {
        def.traffic_classes.insert(v.get<std::string>());
      }
      for (const auto& [oid, other] : slices_) {
        if (slices_overlap(def, other)) {
          reply_error(corr, "BAD_SLICE", "filter overlaps slice " + oid);
          return;
        }
      }
      slices_[id] = def;
      if (slice_apply_) slice_apply_(SliceOp::Create, def);
      reply(MsgType::SLICE_ACK, {{"slice_id", id}, {"ok", true}}, corr);
      return;
    }
    case MsgType::SLICE_READ: {
      std::string id = p.value("slice_id", "");
      auto it = slices_.find(id);
      if (it == slices_.end()) {
        reply_error(corr, "BAD_SLICE", "no such slice");
        return;
      }
      const SliceDef& d = it->second;
      json ues = json::array();
      for (auto u : d.ues) ues.push_back(u);
      json tcs = json::array();
      for (const auto& t : d.traffic_classes) tcs.push_back(t);
      reply(MsgType::SLICE_ACK,
            {{"slice_id", id},
             {"ok", true},
             {"slice",
              {{"weight", d.weight},
               {"rate_cap_mbps", d.rate_cap_mbps},
               {"ues", ues},
               {"traffic_classes", tcs}}}},
            corr);
      return;
    }
    case MsgType::SLICE_UPDATE: {
      std::string id = p.value("slice_id", "");
      auto it = slices_.find(id);
      if (it == slices_.end()) {
        reply_error(corr, "BAD_SLICE", "no such slice");
        return;
      }
      SliceDef def = it->second;
      if (p.contains("weight")) def.weight = std::max(1u, p["weight"].get<std::uint32_t>());
      if (p.contains("rate_cap_mbps")) def.rate_cap_mbps = p["rate_cap_mbps"].get<double>();
      if (p.contains("ues")) {
        def.ues.clear();
        for (const auto& v : p["ues"]) def.ues.insert(v.get<std::uint32_t>());
      }
      if (p.contains("traffic_classes")) {
        def.traffic_classes.clear();
        for (const auto& v : p["traffic_classes"]) {
          def.traffic_classes.insert(v.get<std::string>());
        }
      }
      for (const auto& [oid, other] : slices_) {
        if (oid != id && slices_overlap(def, other)) {
          reply_error(corr, "BAD_SLICE", "filter overlaps slice " + oid);
          return;
        }
      }
      it->second = def;
      if (slice_apply_) slice_apply_(SliceOp::Update, def);
      reply(MsgType::SLICE_ACK, {{"slice_id", id}, {"ok", true}}, corr);
      return;
    }
    case MsgType::SLICE_DELETE: {
      std::string id = p.value("slice_id", "");
      auto it = slices_.find(id);
      if (it == slices_.end()) {
        reply_error(corr, "BAD_SLICE", "no such slice");
        return;
      }
      bool force = p.value("force", false);
      if (!force) {
        for (const auto& [rid, rule] : flows_.rules()) {
          if (slice_matches(it->second, rule.ue, rule.traffic_class)) {
            reply_error(corr, "BAD_SLICE", "slice is in use");
            return;
          }
        }
      }
      SliceDef def = it->second;
      slices_.erase(it);
      if (slice_apply_) slice_apply_(SliceOp::Delete, def);
      reply(MsgType::SLICE_ACK, {{"slice_id", id}, {"ok", true}}, corr);
      return;
    }
    case MsgType::STATS_SUBSCRIBE: {
      stats_period_us_ = static_cast<std::int64_t>(p.value("period_us", 0ull));
      stats_gen_ += 1;
      if (stats_period_us_ > 0 && timer_) {
        std::uint64_t gen = stats_gen_;
        timer_(stats_period_us_, [this, gen] {
          if (gen == stats_gen_) emit_stats();
        });
      }
      return;
    }
    case MsgType::ERROR: {
      counters_.ctrl_errors_seen += 1;
      return;
    }
    default:
      // Controller-bound types landing on the agent side.
      reply_error(corr, "UNKNOWN_RULE", "unexpected message type");
      return;
  }
}

void Wae::emit_stats() {
  if (stats_period_us_ <= 0) return;
  json payload = stats_collector_ ? stats_collector_()
                                  : json{{"aps", json::array()},
                                         {"ue_rssi", json::array()}};
  payload["time_us"] = clock_ ? static_cast<std::uint64_t>(clock_()) : 0ull;
  reply(MsgType::STATS_REPORT, std::move(payload), session_.next_correlation());
  if (timer_) {
    std::uint64_t gen = stats_gen_;
    timer_(stats_period_us_, [this, gen] {
      if (gen == stats_gen_) emit_stats();
    });
  }
}

void Wae::on_from_ap(std::uint32_t ap, sim::Packet&& p) {
  if (p.cls == sim::PacketClass::MGMT) {
    const json& meta = p.meta;
    const std::string kind = meta.value("kind", "");
    std::uint32_t ue = meta.value("ue", 0u);
    if (kind == "ASSOC_IND") {
      serving_[ue] = meta.value("ap", ap);
      auto ho = ho_.find(ue);
      if (ho != ho_.end()) {
        // Make-before-break completes: drain buffered downlink in order
        // at this very instant, then the terminal is steady again.
        for (auto& buffered : ho->second.buffer) {
          if (send_to_ap_) send_to_ap_(serving_[ue], std::move(buffered));
        }
        ho_.erase(ho);
        counters_.handovers += 1;
      }
      return;
    }
    if (kind == "DISASSOC_IND") {
      auto it = serving_.find(ue);
      if (it != serving_.end() && it->second == meta.value("ap", ap)) {
        serving_.erase(it);
      }
      return;
    }
    if (kind == "CONFIG_APPLIED") {
      std::uint64_t corr = meta.value("corr", 0ull);
      auto it = pending_ap_ops_.find(corr);
      if (it == pending_ap_ops_.end()) return;
      pending_ap_ops_.erase(it);
      json ack = {{"ok", meta.value("ok", false)}};
      if (meta.contains("detail")) ack["detail"] = meta["detail"];
      reply(MsgType::CONFIG_ACK, std::move(ack), corr);
      return;
    }
    if (kind == "SA_OK") {
      sa_up_.insert(ue);
      auto it = pending_setup_.find(ue);
      if (it != pending_setup_.end()) {
        reply(MsgType::SESSION_NOTIFY,
              {{"ue", ue},
               {"tunnel_id", it->second.tunnel_id},
               {"rate_mbps", it->second.qos.rate_mbps},
               {"priority", static_cast<std::uint32_t>(it->second.qos.priority)},
               {"latency_budget_us",
                static_cast<std::uint64_t>(it->second.qos.latency_budget_us)}},
              session_.next_correlation());
        pending_setup_.erase(it);
      }
      return;
    }
    return;
  }
  if (p.cls == sim::PacketClass::NAS) {
    p.src = NodeId{NodeKind::WAE, wae_id_};
    p.dst = NodeId{NodeKind::AMF, 0};
    if (send_nas_amf_) send_nas_amf_(std::move(p));
    return;
  }
  if (p.cls == sim::PacketClass::DATA) {
    if (!sa_up_.count(p.ue)) {
      counters_.no_security_assoc += 1;
      return;
    }
    const FlowRule* rule = flows_.match(p.ue, p.traffic_class);
    if (!rule) {
      counters_.uplink_unmatched += 1;
      return;
    }
    if (mode_ == Mode::Proposed) {
      p.size_bytes = p.size_bytes - sim::kIpsecOverheadBytes + sim::kN3EncapBytes;
      p.cls = sim::PacketClass::N3;
      p.tunnel_id = rule->tunnel_id;
      p.src = NodeId{NodeKind::WAE, wae_id_};
      p.dst = NodeId{NodeKind::UPF, 0};
      if (send_n3_) send_n3_(std::move(p));
    } else {
      p.src = NodeId{NodeKind::WAE, wae_id_};
      p.dst = NodeId{NodeKind::CONTROLLER, 0};
      if (send_data_ctrl_) send_data_ctrl_(std::move(p));
    }
    return;
  }
}

void Wae::route_downlink(sim::Packet&& p) {
  std::uint32_t ue = p.ue;
  auto ho = ho_.find(ue);
  if (ho != ho_.end()) {
    if (ho->second.buffer.size() >= kHoBufferCap) {
      ho->second.buffer.pop_front();
      counters_.ho_buffer_drops += 1;
    }
    ho->second.buffer.push_back(std::move(p));
    return;
  }
  auto it = serving_.find(ue);
  if (it == serving_.end()) {
    counters_.downlink_unroutable += 1;
    return;
  }
  if (send_to_ap_) send_to_ap_(it->second, std::move(p));
}

void Wae::on_n3(sim::Packet&& p) {
  const FlowRule* rule = flows_.match(p.ue, p.traffic_class);
  if (!rule || rule->tunnel_id != p.tunnel_id) {
    counters_.unknown_tunnel += 1;
    return;
  }
  p.size_bytes = p.size_bytes - sim::kN3EncapBytes + sim::kIpsecOverheadBytes;
  p.cls = sim::PacketClass::DATA;
  p.downlink = true;
  p.src = NodeId{NodeKind::WAE, wae_id_};
  p.dst = NodeId{NodeKind::UE, p.ue};
  route_downlink(std::move(p));
}

void Wae::on_data_from_ctrl(sim::Packet&& p) {
  p.downlink = true;
  p.src = NodeId{NodeKind::WAE, wae_id_};
  p.dst = NodeId{NodeKind::UE, p.ue};
  route_downlink(std::move(p));
}

void Wae::on_from_amf(sim::Packet&& p) {
  if (p.cls == sim::PacketClass::NAS) {
    if (p.bytes.size() < 5) {
      counters_.nas_unroutable += 1;
      return;
    }
    std::uint32_t ue = (std::uint32_t{p.bytes[1]} << 24) |
                       (std::uint32_t{p.bytes[2]} << 16) |
                       (std::uint32_t{p.bytes[3]} << 8) | std::uint32_t{p.bytes[4]};
    auto it = serving_.find(ue);
    if (it == serving_.end()) {
      counters_.nas_unroutable += 1;
      return;
    }
    p.src = NodeId{NodeKind::WAE, wae_id_};
    p.dst = NodeId{NodeKind::UE, ue};
    if (send_to_ap_) send_to_ap_(it->second, std::move(p));
    return;
  }
  if (p.cls == sim::PacketClass::MGMT && p.meta.value("kind", "") == "N2_SETUP") {
    std::uint32_t ue = p.meta.value("ue", 0u);
    PendingSetup setup;
    setup.tunnel_id = p.meta.value("tunnel_id", 0ull);
    setup.qos.rate_mbps = p.meta.value("rate_mbps", 10.0);
    setup.qos.priority = static_cast<int>(p.meta.value("priority", 1u));
    setup.qos.latency_budget_us =
        static_cast<std::int64_t>(p.meta.value("latency_budget_us", 20000ull));
    pending_setup_[ue] = setup;
    auto it = serving_.find(ue);
    if (it == serving_.end()) {
      counters_.nas_unroutable += 1;
      return;
    }
    if (send_to_ap_) {
      send_to_ap_(it->second, make_mgmt(NodeId{NodeKind::UE, ue},
                                        {{"kind", "SA_INIT"}, {"ue", ue}}));
    }
    return;
  }
}

}  // namespace wlansdn::dp
