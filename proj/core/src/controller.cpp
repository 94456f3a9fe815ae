// SPDX-License-Identifier: Apache-2.0
#include "wlansdn/controller.hpp"

#include <algorithm>

namespace wlansdn::ctrl {

using cmi::CmiMessage;
using cmi::MsgType;

RanController::RanController(Config cfg)
    : cfg_(std::move(cfg)),
      session_(cmi::CmiSession::Config{
          .role = cmi::CmiSession::Role::Controller,
          .controller_id = cfg_.controller_id}) {
  for (std::uint32_t ap = 0; ap < cfg_.ap_count; ++ap) view_.aps[ap];
}

void RanController::send_frame(std::vector<std::uint8_t>&& bytes) {
  if (send_) send_(std::move(bytes));
}

void RanController::send_msg(MsgType type, json payload, std::uint64_t corr) {
  send_frame(session_.encode(type, std::move(payload), corr));
}

void RanController::start() { send_frame(session_.start()); }

void RanController::on_bytes(std::span<const std::uint8_t> bytes) {
  bool was_established = session_.established();
  auto outcome = session_.on_bytes(bytes);
  for (auto& f : outcome.to_send) send_frame(std::move(f));
  counters_.decode_errors += outcome.decode_errors.size();
  if (!was_established && session_.established()) on_established();
  for (const CmiMessage& msg : outcome.delivered) handle_msg(msg);
}

void RanController::on_established() {
  send_msg(MsgType::STATS_SUBSCRIBE,
           {{"period_us", static_cast<std::uint64_t>(cfg_.stats_period_us)}},
           session_.next_correlation());
  arm_audit_timer();
  if (cfg_.channel_mgmt_enabled) arm_channel_timer();
}

void RanController::arm_audit_timer() {
  if (cfg_.audit_period_us <= 0 || !timer_) return;
  timer_(cfg_.audit_period_us, [this] {
    if (session_.established()) {
      std::uint64_t corr = session_.next_correlation();
      probes_[corr] = now();
      send_msg(MsgType::CONFIG_GET, {{"what", "flows"}}, corr);
      // Probes whose answers were lost to queue drops age out.
      std::erase_if(probes_,
                    [this](const auto& kv) { return kv.second + 1000000 < now(); });
    }
    arm_audit_timer();
  });
}

void RanController::arm_channel_timer() {
  if (cfg_.channel_period_us <= 0 || !timer_) return;
  timer_(cfg_.channel_period_us, [this] {
    run_channel_plan();
    arm_channel_timer();
  });
}

std::optional<std::uint64_t> RanController::tunnel_for(
    std::uint32_t ue, const std::string& tc) const {
  const dp::FlowRule* r = confirmed_.match(ue, tc);
  if (!r) return std::nullopt;
  return r->tunnel_id;
}

RuleState RanController::rule_state(std::uint64_t rule_id) const {
  auto it = rules_.find(rule_id);
  return it == rules_.end() ? RuleState::Failed : it->second.state;
}

// ---- flow rule lifecycle ----

void RanController::send_rule_op(std::uint64_t rule_id) {
  RuleRec& r = rules_.at(rule_id);
  std::uint64_t corr = session_.next_correlation();
  r.corr = corr;
  r.attempts += 1;
  corr_to_rule_[corr] = rule_id;
  MsgType type = r.op == RuleOp::Add   ? MsgType::FLOW_ADD
                 : r.op == RuleOp::Mod ? MsgType::FLOW_MOD
                                       : MsgType::FLOW_DEL;
  send_msg(type, r.payload, corr);
  arm_rule_timer(rule_id, corr);
}

void RanController::arm_rule_timer(std::uint64_t rule_id, std::uint64_t corr) {
  if (!timer_ || cfg_.retx_timeout_us <= 0) return;
  timer_(cfg_.retx_timeout_us, [this, rule_id, corr] {
    auto it = rules_.find(rule_id);
    if (it == rules_.end()) return;
    RuleRec& r = it->second;
    if (r.state != RuleState::Pending || r.corr != corr) return;
    if (r.attempts >= cfg_.max_attempts) {
      r.state = RuleState::Failed;
      counters_.failed_rules += 1;
      return;
    }
    counters_.retransmissions += 1;
    send_rule_op(rule_id);
  });
}

void RanController::install_flow(std::uint32_t ue, std::uint64_t tunnel_id,
                                 QosProfile qos) {
  std::string slice_id = dp::resolve_slice(view_.slices, ue, "default");
  auto tpl = view_.slices.find(slice_id);
  if (tpl != view_.slices.end() && tpl->second.rate_cap_mbps > 0 &&
      qos.rate_mbps > tpl->second.rate_cap_mbps) {
    qos.rate_mbps = tpl->second.rate_cap_mbps;
    counters_.cap_clamps += 1;
  }

  dp::FlowRule rule;
  rule.rule_id = next_rule_id_++;
  rule.ue = ue;
  rule.traffic_class = "default";
  rule.tunnel_id = tunnel_id;
  auto uv = view_.ues.find(ue);
  rule.ap = (uv != view_.ues.end() && uv->second.serving_ap)
                ? *uv->second.serving_ap
                : 0;
  rule.qos = qos;
  rule.slice_id = slice_id;

  RuleRec rec;
  rec.target = rule;
  rec.op = RuleOp::Add;
  rec.payload = {{"rule_id", rule.rule_id},
                 {"ue", rule.ue},
                 {"traffic_class", rule.traffic_class},
                 {"out", "N3:" + std::to_string(rule.tunnel_id)},
                 {"ap", rule.ap},
                 {"rate_mbps", rule.qos.rate_mbps},
                 {"priority", static_cast<std::uint32_t>(rule.qos.priority)},
                 {"latency_budget_us",
                  static_cast<std::uint64_t>(rule.qos.latency_budget_us)},
                 {"slice_id", rule.slice_id}};
  rules_.emplace(rule.rule_id, std::move(rec));
  send_rule_op(rule.rule_id);
}

// ---- inbound ----

void RanController::handle_msg(const CmiMessage& msg) {
  switch (msg.type) {
    case MsgType::FLOW_ACK: {
      auto cit = corr_to_rule_.find(msg.correlation_id);
      if (cit == corr_to_rule_.end()) {
        counters_.stray_acks += 1;
        return;
      }
      std::uint64_t rule_id = cit->second;
      corr_to_rule_.erase(cit);
      auto rit = rules_.find(rule_id);
      if (rit == rules_.end()) return;
      RuleRec& r = rit->second;
      if (r.state != RuleState::Pending) return;
      bool ok = msg.payload.value("ok", false);
      // A retransmission that raced its own first copy acks as a duplicate;
      // the rule is installed either way.
      if (!ok && r.op == RuleOp::Add && r.attempts > 1 &&
          msg.payload.value("detail", "") == "duplicate rule") {
        ok = true;
      }
      if (!ok) {
        counters_.flow_op_failures += 1;
        if (r.op == RuleOp::Add) {
          r.state = RuleState::Failed;
          counters_.failed_rules += 1;
        } else {
          r.state = RuleState::Confirmed;  // keeps the previous binding
          r.target = *confirmed_.by_id(rule_id);
        }
        return;
      }
      switch (r.op) {
        case RuleOp::Add:
          confirmed_.add(r.target);
          r.state = RuleState::Confirmed;
          break;
        case RuleOp::Mod:
          confirmed_.mod(rule_id, r.target);
          r.state = RuleState::Confirmed;
          break;
        case RuleOp::Del:
          confirmed_.del(rule_id);
          rules_.erase(rit);
          break;
      }
      return;
    }
    case MsgType::CONFIG_ACK: {
      auto pit = probes_.find(msg.correlation_id);
      if (pit != probes_.end()) {
        rtt_us_.push_back(now() - pit->second);
        probes_.erase(pit);
        bool transient =
            std::any_of(rules_.begin(), rules_.end(), [](const auto& kv) {
              return kv.second.state == RuleState::Pending;
            });
        if (!transient && msg.payload.contains("flows")) {
          std::vector<std::uint64_t> theirs;
          for (const auto& v : msg.payload["flows"]) {
            theirs.push_back(v.get<std::uint64_t>());
          }
          std::vector<std::uint64_t> ours;
          for (const auto& [id, rule] : confirmed_.rules()) ours.push_back(id);
          if (theirs == ours) counters_.audits_ok += 1;
          else counters_.audit_mismatches += 1;
        }
        return;
      }
      auto mit = pending_policies_.find(msg.correlation_id);
      if (mit != pending_policies_.end()) {
        auto [ap, suppress] = mit->second;
        pending_policies_.erase(mit);
        if (msg.payload.value("ok", false)) {
          apps::ApView& v = view_.aps[ap];
          v.suppressing = suppress;
          v.policy.suppress_probe_above_load =
              suppress ? cfg_.admission_threshold
                       : MgmtPolicy{}.suppress_probe_above_load;
        }
        return;
      }
      auto qit = pending_configs_.find(msg.correlation_id);
      if (qit != pending_configs_.end()) {
        pending_configs_.erase(qit);
        return;
      }
      counters_.stray_acks += 1;
      return;
    }
    case MsgType::SLICE_ACK: {
      auto sit = pending_slices_.find(msg.correlation_id);
      if (sit == pending_slices_.end()) {
        counters_.stray_acks += 1;
        return;
      }
      PendingSlice op = std::move(sit->second);
      pending_slices_.erase(sit);
      if (!msg.payload.value("ok", false)) {
        counters_.slice_op_failures += 1;
        return;
      }
      switch (op.kind) {
        case SliceOpKind::Create:
        case SliceOpKind::Update:
          view_.slices[op.def.id] = op.def;
          break;
        case SliceOpKind::Delete:
          view_.slices.erase(op.def.id);
          break;
      }
      return;
    }
    case MsgType::SESSION_NOTIFY: {
      std::uint32_t ue = msg.payload.value("ue", 0u);
      std::uint64_t tunnel = msg.payload.value("tunnel_id", 0ull);
      for (const auto& [id, rec] : rules_) {
        if (rec.target.ue == ue && rec.target.traffic_class == "default" &&
            rec.state != RuleState::Failed) {
          return;  // already programmed or in flight
        }
      }
      QosProfile qos;
      qos.rate_mbps = msg.payload.value("rate_mbps", qos.rate_mbps);
      qos.priority = static_cast<int>(msg.payload.value("priority", 1u));
      qos.latency_budget_us = static_cast<std::int64_t>(
          msg.payload.value("latency_budget_us", 20000ull));
      install_flow(ue, tunnel, qos);
      return;
    }
    case MsgType::STATS_REPORT:
      on_stats_report(msg.payload);
      return;
    case MsgType::ERROR: {
      counters_.errors_received += 1;
      auto cit = corr_to_rule_.find(msg.correlation_id);
      if (cit != corr_to_rule_.end()) {
        auto rit = rules_.find(cit->second);
        corr_to_rule_.erase(cit);
        if (rit != rules_.end() && rit->second.state == RuleState::Pending) {
          counters_.flow_op_failures += 1;
          if (rit->second.op == RuleOp::Add) {
            rit->second.state = RuleState::Failed;
            counters_.failed_rules += 1;
          } else if (const dp::FlowRule* cur = confirmed_.by_id(rit->first)) {
            rit->second.state = RuleState::Confirmed;
            rit->second.target = *cur;
          } else {
            rules_.erase(rit);
          }
        }
        return;
      }
      auto sit = pending_slices_.find(msg.correlation_id);
      if (sit != pending_slices_.end()) {
        counters_.slice_op_failures += 1;
        pending_slices_.erase(sit);
        return;
      }
      pending_policies_.erase(msg.correlation_id);
      pending_configs_.erase(msg.correlation_id);
      return;
    }
    default:
      counters_.stray_acks += 1;
      return;
  }
}

void RanController::on_stats_report(const json& payload) {
  const json aps = payload.value("aps", json::array());
  const json ues = payload.value("ue_rssi", json::array());

  // A report naming a node outside the scenario is discarded whole.
  for (const auto& a : aps) {
    if (a.value("ap", 0u) >= cfg_.ap_count) {
      counters_.unknown_node_reports += 1;
      return;
    }
  }
  for (const auto& u : ues) {
    if (u.value("ue", 0u) >= cfg_.ue_count) {
      counters_.unknown_node_reports += 1;
      return;
    }
    const json rssi_map = u.value("rssi", json::object());
    for (const auto& [ap_key, rssi] : rssi_map.items()) {
      if (static_cast<std::uint32_t>(std::stoul(ap_key)) >= cfg_.ap_count) {
        counters_.unknown_node_reports += 1;
        return;
      }
    }
  }

  view_.last_report_us =
      static_cast<std::int64_t>(payload.value("time_us", 0ull));
  for (const auto& a : aps) {
    apps::ApView& v = view_.aps[a.value("ap", 0u)];
    v.channel = a.value("channel", v.channel);
    v.load = a.value("load", 0u);
    if (a.contains("neighbors")) {
      v.neighbors.clear();
      for (const auto& n : a["neighbors"]) v.neighbors.insert(n.get<std::uint32_t>());
    }
  }
  std::vector<std::uint32_t> rssi_updated;
  for (const auto& u : ues) {
    std::uint32_t ue = u.value("ue", 0u);
    apps::UeView& v = view_.ues[ue];
    if (u.contains("serving") && !u["serving"].is_null()) {
      v.serving_ap = u["serving"].get<std::uint32_t>();
    } else {
      v.serving_ap.reset();
    }
    apps::RssiReport rep;
    rep.time_us = view_.last_report_us;
    const json rssi_map = u.value("rssi", json::object());
    for (const auto& [ap_key, rssi] : rssi_map.items()) {
      rep.by_ap[static_cast<std::uint32_t>(std::stoul(ap_key))] =
          rssi.get<double>();
    }
    v.rssi_history.push_back(std::move(rep));
    while (v.rssi_history.size() > apps::kRssiHistoryDepth) {
      v.rssi_history.pop_front();
    }
    rssi_updated.push_back(ue);

    auto st = steering_.find(ue);
    if (st != steering_.end() &&
        ((v.serving_ap && *v.serving_ap == st->second.target) ||
         now() > st->second.deadline_us)) {
      steering_.erase(st);
    }
  }

  if (cfg_.admission_enabled) run_admission();
  if (cfg_.lb_enabled) run_load_balancer();
  if (cfg_.ho_enabled) {
    for (std::uint32_t ue : rssi_updated) run_handover(ue);
  }
}

// ---- hosted apps ----

void RanController::run_admission() {
  auto intents = apps::admission_policy_update(view_.aps, cfg_.admission_threshold);
  for (const apps::PolicyIntent& intent : intents) {
    bool already_in_flight = std::any_of(
        pending_policies_.begin(), pending_policies_.end(),
        [&](const auto& kv) { return kv.second.first == intent.ap; });
    if (already_in_flight) continue;
    std::uint64_t threshold =
        intent.suppress ? static_cast<std::uint64_t>(intent.threshold)
                        : static_cast<std::uint64_t>(
                              MgmtPolicy{}.suppress_probe_above_load);
    std::uint64_t corr = session_.next_correlation();
    pending_policies_[corr] = {intent.ap, intent.suppress};
    send_msg(MsgType::MGMT_POLICY_SET,
             {{"ap", intent.ap}, {"suppress_probe_above_load", threshold}},
             corr);
  }
}

void RanController::run_load_balancer() {
  if (view_.aps.empty()) return;
  std::uint32_t max_ap = view_.aps.begin()->first;
  std::uint32_t min_ap = max_ap;
  for (const auto& [id, ap] : view_.aps) {
    if (ap.load > view_.aps[max_ap].load) max_ap = id;
    if (ap.load < view_.aps[min_ap].load) min_ap = id;
  }
  if (view_.aps[max_ap].load < view_.aps[min_ap].load + 2) return;

  // Move one terminal per report; repeated reports converge.
  for (const auto& [ue, uv] : view_.ues) {
    if (!uv.serving_ap || *uv.serving_ap != max_ap) continue;
    if (steering_.count(ue)) continue;
    if (uv.rssi_history.empty()) continue;
    const apps::RssiReport& latest = uv.rssi_history.back();
    std::vector<apps::LbCandidate> cands;
    for (const auto& [ap, rssi] : latest.by_ap) {
      if (ap == max_ap || rssi < sim::kAssocThresholdDbm) continue;
      auto av = view_.aps.find(ap);
      if (av == view_.aps.end()) continue;
      cands.push_back({ap, rssi, av->second.load});
    }
    auto target = apps::lb_select_ap(cands);
    if (!target) continue;
    if (view_.aps[*target].load + 2 > view_.aps[max_ap].load) continue;
    if (!steer_ue(ue, *target)) {
      counters_.lb_moves += 1;
      return;
    }
  }
}

void RanController::run_handover(std::uint32_t ue) {
  if (steering_.count(ue)) return;
  auto uv = view_.ues.find(ue);
  if (uv == view_.ues.end()) return;
  auto target = apps::ho_decide(cfg_.ho_policy, uv->second);
  if (target) steer_ue(ue, *target);
}

void RanController::run_channel_plan() {
  if (!session_.established() || view_.aps.empty()) return;
  if (!pending_configs_.empty()) return;  // let earlier pushes settle first
  apps::ConflictGraph g;
  std::map<std::uint32_t, int> current;
  for (const auto& [id, ap] : view_.aps) {
    g.nodes.insert(id);
    current[id] = ap.channel;
    for (std::uint32_t nb : ap.neighbors) g.add_edge(id, nb);
  }
  auto plan = apps::assign_channels(
      g, {std::begin(kAllowedChannels), std::end(kAllowedChannels)}, current);
  for (const auto& [id, ch] : plan) {
    if (ch != current[id]) push_config(id, {{"channel", ch}});
  }
}

// ---- northbound ----

std::optional<OpError> RanController::steer_ue(std::uint32_t ue,
                                               std::uint32_t target_ap) {
  if (target_ap >= cfg_.ap_count) {
    return OpError{"UnknownTarget", "no such radio"};
  }
  auto uv = view_.ues.find(ue);
  if (uv == view_.ues.end() || !uv->second.serving_ap) {
    return OpError{"UeNotReady", "terminal has no serving radio on record"};
  }
  if (*uv->second.serving_ap == target_ap) {
    return OpError{"SameAp", "terminal already lives there"};
  }
  send_msg(MsgType::UE_STEER, {{"ue", ue}, {"target_ap", target_ap}},
           session_.next_correlation());
  const dp::FlowRule* rule = confirmed_.match(ue, "default");
  if (rule) {
    auto rit = rules_.find(rule->rule_id);
    if (rit != rules_.end() && rit->second.state == RuleState::Confirmed) {
      RuleRec& r = rit->second;
      r.op = RuleOp::Mod;
      r.state = RuleState::Pending;
      r.attempts = 0;
      r.target = *rule;
      r.target.ap = target_ap;
      r.payload = {{"rule_id", rule->rule_id}, {"ap", target_ap}};
      send_rule_op(rule->rule_id);
    }
  }
  steering_[ue] = {target_ap, now() + 5 * cfg_.stats_period_us};
  counters_.steers_issued += 1;
  return std::nullopt;
}

std::optional<OpError> RanController::push_config(std::uint32_t ap,
                                                  const json& config) {
  if (ap >= cfg_.ap_count) return OpError{"UnknownAp", "no such radio"};
  json payload = {{"ap", ap}};
  if (config.contains("channel")) {
    int ch = config["channel"].get<int>();
    if (!channel_allowed(ch)) {
      return OpError{"BadChannel", "channel outside the allowed plan"};
    }
    payload["channel"] = ch;
  }
  if (config.contains("tx_power_dbm")) {
    payload["tx_power_dbm"] = config["tx_power_dbm"];
  }
  if (config.contains("suppress_probe_above_load")) {
    payload["suppress_probe_above_load"] = config["suppress_probe_above_load"];
  }
  if (config.contains("deny_list")) payload["deny_list"] = config["deny_list"];
  std::uint64_t corr = session_.next_correlation();
  pending_configs_[corr] = ap;
  send_msg(MsgType::CONFIG_SET, std::move(payload), corr);
  return std::nullopt;
}

std::optional<OpError> RanController::send_slice_op(SliceOpKind kind,
                                                    const dp::SliceDef& def,
                                                    bool force) {
  std::uint64_t corr = session_.next_correlation();
  json payload = {{"slice_id", def.id}};
  if (kind != SliceOpKind::Delete) {
    payload["weight"] = def.weight;
    payload["rate_cap_mbps"] = def.rate_cap_mbps;
    json ues = json::array();
    for (auto u : def.ues) ues.push_back(u);
    payload["ues"] = std::move(ues);
    json tcs = json::array();
    for (const auto& t : def.traffic_classes) tcs.push_back(t);
    payload["traffic_classes"] = std::move(tcs);
  } else if (force) {
    payload["force"] = true;
  }
  pending_slices_[corr] = {kind, def};
  MsgType type = kind == SliceOpKind::Create   ? MsgType::SLICE_CREATE
                 : kind == SliceOpKind::Update ? MsgType::SLICE_UPDATE
                                               : MsgType::SLICE_DELETE;
  send_msg(type, std::move(payload), corr);
  return std::nullopt;
}

std::optional<OpError> RanController::create_slice(const dp::SliceDef& def) {
  if (def.id.empty() || def.id == dp::kDefaultSliceId) {
    return OpError{"DuplicateSlice", "slice id is reserved"};
  }
  if (view_.slices.count(def.id)) {
    return OpError{"DuplicateSlice", "slice id already exists"};
  }
  for (const auto& [corr, op] : pending_slices_) {
    if (op.kind != SliceOpKind::Delete && op.def.id == def.id) {
      return OpError{"DuplicateSlice", "slice id already in flight"};
    }
  }
  dp::SliceDef fixed = def;
  fixed.weight = std::max(1u, fixed.weight);
  auto overlaps = [&](const dp::SliceDef& other) {
    return dp::slices_overlap(fixed, other);
  };
  for (const auto& [id, other] : view_.slices) {
    if (overlaps(other)) return OpError{"OverlappingFilter", "overlaps " + id};
  }
  for (const auto& [corr, op] : pending_slices_) {
    if (op.kind != SliceOpKind::Delete && overlaps(op.def)) {
      return OpError{"OverlappingFilter", "overlaps " + op.def.id};
    }
  }
  return send_slice_op(SliceOpKind::Create, fixed, false);
}

std::optional<OpError> RanController::update_slice(const dp::SliceDef& def) {
  if (!view_.slices.count(def.id)) {
    return OpError{"UnknownSlice", "no such slice"};
  }
  dp::SliceDef fixed = def;
  fixed.weight = std::max(1u, fixed.weight);
  for (const auto& [id, other] : view_.slices) {
    if (id != def.id && dp::slices_overlap(fixed, other)) {
      return OpError{"OverlappingFilter", "overlaps " + id};
    }
  }
  for (const auto& [corr, op] : pending_slices_) {
    if (op.kind != SliceOpKind::Delete && op.def.id != def.id &&
        dp::slices_overlap(fixed, op.def)) {
      return OpError{"OverlappingFilter", "overlaps " + op.def.id};
    }
  }
  return send_slice_op(SliceOpKind::Update, fixed, false);
}

std::optional<OpError> RanController::delete_slice(const std::string& id,
                                                   bool force) {
  auto it = view_.slices.find(id);
  if (it == view_.slices.end()) return OpError{"UnknownSlice", "no such slice"};
  std::vector<std::uint64_t> referencing;
  for (const auto& [rid, rule] : confirmed_.rules()) {
    if (dp::slice_matches(it->second, rule.ue, rule.traffic_class)) {
      referencing.push_back(rid);
    }
  }
  if (!referencing.empty() && !force) {
    return OpError{"SliceInUse", "confirmed flows still reference the slice"};
  }
  for (std::uint64_t rid : referencing) {
    auto rit = rules_.find(rid);
    if (rit == rules_.end() || rit->second.state != RuleState::Confirmed) continue;
    RuleRec& r = rit->second;
    r.op = RuleOp::Del;
    r.state = RuleState::Pending;
    r.attempts = 0;
    r.payload = {{"rule_id", rid}};
    send_rule_op(rid);
  }
  dp::SliceDef stub;
  stub.id = id;
  return send_slice_op(SliceOpKind::Delete, stub, force);
}

}  // namespace wlansdn::ctrl
