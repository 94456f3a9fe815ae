// SPDX-License-Identifier: Apache-2.0
#include "wlansdn/domain.hpp"

#include <charconv>

namespace wlansdn {

bool channel_allowed(int ch) {
  return ch == 1 || ch == 6 || ch == 11;
}

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::UE: return "UE";
    case NodeKind::AP: return "AP";
    case NodeKind::WAE: return "WAE";
    case NodeKind::CONTROLLER: return "CTRL";
    case NodeKind::AMF: return "AMF";
    case NodeKind::UPF: return "UPF";
    case NodeKind::DN: return "DN";
  }
  return "?";
}

std::string NodeId::str() const {
  return std::string(to_string(kind)) + ":" + std::to_string(index);
}

std::optional<NodeId> NodeId::parse(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos || colon + 1 >= text.size()) return std::nullopt;
  std::string head = text.substr(0, colon);
  NodeKind kind;
  if (head == "UE") kind = NodeKind::UE;
  else if (head == "AP") kind = NodeKind::AP;
  else if (head == "WAE") kind = NodeKind::WAE;
  else if (head == "CTRL") kind = NodeKind::CONTROLLER;
  else if (head == "AMF") kind = NodeKind::AMF;
  else if (head == "UPF") kind = NodeKind::UPF;
  else if (head == "DN") kind = NodeKind::DN;
  else return std::nullopt;

  std::uint32_t index = 0;
  const char* first = text.data() + colon + 1;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, index);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return NodeId{kind, index};
}

const char* to_string(UeState s) {
  switch (s) {
    case UeState::IDLE: return "IDLE";
    case UeState::SCANNING: return "SCANNING";
    case UeState::ASSOCIATING: return "ASSOCIATING";
    case UeState::AUTHENTICATING: return "AUTHENTICATING";
    case UeState::REGISTERED: return "REGISTERED";
    case UeState::SESSION_ACTIVE: return "SESSION_ACTIVE";
    case UeState::HANDOVER: return "HANDOVER";
  }
  return "?";
}

const char* to_string(UeTrigger t) {
  switch (t) {
    case UeTrigger::PROBE_SENT: return "PROBE_SENT";
    case UeTrigger::ASSOC_OK: return "ASSOC_OK";
    case UeTrigger::AUTH_START: return "AUTH_START";
    case UeTrigger::AUTH_OK: return "AUTH_OK";
    case UeTrigger::AUTH_FAIL: return "AUTH_FAIL";
    case UeTrigger::SESSION_OK: return "SESSION_OK";
    case UeTrigger::STEER: return "STEER";
    case UeTrigger::HO_DONE: return "HO_DONE";
    case UeTrigger::DETACH: return "DETACH";
  }
  return "?";
}

IllegalTransition::IllegalTransition(UeState s, UeTrigger t)
    : std::runtime_error(std::string("illegal transition: ") + to_string(s) +
                         " + " + to_string(t)),
      state(s),
      trigger(t) {}

void ue_transition(UeContext& ctx, UeTrigger trigger, const TransitionData& data) {
  // DETACH is legal from every attached state and always lands in IDLE.
  // The anchor survives so a re-attach returns to the same gateway.
  if (trigger == UeTrigger::DETACH) {
    if (ctx.state == UeState::IDLE) throw IllegalTransition(ctx.state, trigger);
    ctx.state = UeState::IDLE;
    ctx.serving_ap.reset();
    ctx.tunnel_id.reset();
    return;
  }

  switch (ctx.state) {
    case UeState::IDLE:
      if (trigger == UeTrigger::PROBE_SENT) {
        ctx.state = UeState::SCANNING;
        return;
      }
      break;
    case UeState::SCANNING:
      if (trigger == UeTrigger::PROBE_SENT) return;  // re-probe, stay put
      if (trigger == UeTrigger::ASSOC_OK) {
        ctx.state = UeState::ASSOCIATING;
        return;
      }
      break;
    case UeState::ASSOCIATING:
      if (trigger == UeTrigger::AUTH_START) {
        if (!data.ap) throw IllegalTransition(ctx.state, trigger);
        ctx.serving_ap = *data.ap;
        ctx.state = UeState::AUTHENTICATING;
        return;
      }
      break;
    case UeState::AUTHENTICATING:
      if (trigger == UeTrigger::AUTH_OK) {
        ctx.state = UeState::REGISTERED;
        return;
      }
      if (trigger == UeTrigger::AUTH_FAIL) {
        ctx.state = UeState::IDLE;
        ctx.serving_ap.reset();
        ctx.auth_attempts += 1;
        return;
      }
      break;
    case UeState::REGISTERED:
      if (trigger == UeTrigger::SESSION_OK) {
        if (!data.tunnel_id) throw IllegalTransition(ctx.state, trigger);
        ctx.tunnel_id = *data.tunnel_id;
        if (!ctx.anchor_wae && data.wae) ctx.anchor_wae = *data.wae;
        ctx.state = UeState::SESSION_ACTIVE;
        ctx.auth_attempts = 0;
        return;
      }
      break;
    case UeState::SESSION_ACTIVE:
      if (trigger == UeTrigger::STEER) {
        // Session and anchor are untouched; only the radio leg moves.
        ctx.state = UeState::HANDOVER;
        return;
      }
      break;
    case UeState::HANDOVER:
      if (trigger == UeTrigger::HO_DONE) {
        if (!data.ap) throw IllegalTransition(ctx.state, trigger);
        ctx.serving_ap = *data.ap;
        ctx.state = UeState::SESSION_ACTIVE;
        return;
      }
      break;
  }
  throw IllegalTransition(ctx.state, trigger);
}

bool ue_invariants_hold(const UeContext& ctx) {
  bool serving_expected = ctx.state == UeState::AUTHENTICATING ||
                          ctx.state == UeState::REGISTERED ||
                          ctx.state == UeState::SESSION_ACTIVE ||
                          ctx.state == UeState::HANDOVER;
  bool tunnel_expected = ctx.state == UeState::SESSION_ACTIVE ||
                         ctx.state == UeState::HANDOVER;
  if (ctx.serving_ap.has_value() != serving_expected) return false;
  if (ctx.tunnel_id.has_value() != tunnel_expected) return false;
  return true;
}

}  // namespace wlansdn
