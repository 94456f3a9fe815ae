// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "wlansdn/domain.hpp"

#include <map>
#include <utility>
#include <vector>

using namespace wlansdn;

TEST_CASE("node ids print and parse") {
  NodeId id{NodeKind::UE, 3};
  CHECK(id.str() == "UE:3");
  CHECK(NodeId::parse("UE:3") == id);
  CHECK(NodeId::parse("AP:0") == NodeId{NodeKind::AP, 0});
  CHECK(NodeId::parse("CTRL:1") == NodeId{NodeKind::CONTROLLER, 1});
  CHECK(NodeId::parse("WAE:2") == NodeId{NodeKind::WAE, 2});
  CHECK_FALSE(NodeId::parse("ue:3").has_value());
  CHECK_FALSE(NodeId::parse("UE").has_value());
  CHECK_FALSE(NodeId::parse("UE:").has_value());
  CHECK_FALSE(NodeId::parse("UE:x").has_value());
  CHECK_FALSE(NodeId::parse("UE:3x").has_value());
  CHECK_FALSE(NodeId::parse("UE:-1").has_value());
}

TEST_CASE("only the three non-overlapping channels are allowed") {
  CHECK(channel_allowed(1));
  CHECK(channel_allowed(6));
  CHECK(channel_allowed(11));
  for (int ch : {0, 2, 3, 4, 5, 7, 8, 9, 10, 12, 13, 36}) CHECK_FALSE(channel_allowed(ch));
}

namespace {

UeContext make_ctx(UeState s) {
  UeContext c;
  c.index = 4;
  c.state = s;
  switch (s) {
    case UeState::IDLE:
    case UeState::SCANNING:
    case UeState::ASSOCIATING:
      break;
    case UeState::AUTHENTICATING:
    case UeState::REGISTERED:
      c.serving_ap = 1;
      break;
    case UeState::SESSION_ACTIVE:
    case UeState::HANDOVER:
      c.serving_ap = 1;
      c.tunnel_id = 7;
      c.anchor_wae = 0;
      break;
  }
  return c;
}

TransitionData data_for(UeTrigger t) {
  TransitionData d;
  if (t == UeTrigger::AUTH_START) d.ap = 1;
  if (t == UeTrigger::HO_DONE) d.ap = 2;
  if (t == UeTrigger::SESSION_OK) {
    d.tunnel_id = 7;
    d.wae = 0;
  }
  return d;
}

}  // namespace

TEST_CASE("every state and trigger pair behaves per the table") {
  // Independent statement of the legal transitions.
  std::map<std::pair<UeState, UeTrigger>, UeState> legal = {
      {{UeState::IDLE, UeTrigger::PROBE_SENT}, UeState::SCANNING},
      {{UeState::SCANNING, UeTrigger::PROBE_SENT}, UeState::SCANNING},
      {{UeState::SCANNING, UeTrigger::ASSOC_OK}, UeState::ASSOCIATING},
      {{UeState::ASSOCIATING, UeTrigger::AUTH_START}, UeState::AUTHENTICATING},
      {{UeState::AUTHENTICATING, UeTrigger::AUTH_OK}, UeState::REGISTERED},
      {{UeState::AUTHENTICATING, UeTrigger::AUTH_FAIL}, UeState::IDLE},
      {{UeState::REGISTERED, UeTrigger::SESSION_OK}, UeState::SESSION_ACTIVE},
      {{UeState::SESSION_ACTIVE, UeTrigger::STEER}, UeState::HANDOVER},
      {{UeState::HANDOVER, UeTrigger::HO_DONE}, UeState::SESSION_ACTIVE},
  };
  const std::vector<UeState> states = {
      UeState::IDLE,          UeState::SCANNING,  UeState::ASSOCIATING,
      UeState::AUTHENTICATING, UeState::REGISTERED, UeState::SESSION_ACTIVE,
      UeState::HANDOVER};
  const std::vector<UeTrigger> triggers = {
      UeTrigger::PROBE_SENT, UeTrigger::ASSOC_OK, UeTrigger::AUTH_START,
      UeTrigger::AUTH_OK,    UeTrigger::AUTH_FAIL, UeTrigger::SESSION_OK,
      UeTrigger::STEER,      UeTrigger::HO_DONE,   UeTrigger::DETACH};

  for (UeState s : states) {
    for (UeTrigger t : triggers) {
      UeContext ctx = make_ctx(s);
      REQUIRE(ue_invariants_hold(ctx));
      INFO("state=" << to_string(s) << " trigger=" << to_string(t));
      if (t == UeTrigger::DETACH) {
        if (s == UeState::IDLE) {
          CHECK_THROWS_AS(ue_transition(ctx, t), IllegalTransition);
        } else {
          ue_transition(ctx, t);
          CHECK(ctx.state == UeState::IDLE);
          CHECK(ue_invariants_hold(ctx));
        }
        continue;
      }
      auto it = legal.find({s, t});
      if (it == legal.end()) {
        CHECK_THROWS_AS(ue_transition(ctx, t, data_for(t)), IllegalTransition);
        CHECK(ctx.state == s);  // failed transitions leave the context alone
      } else {
        ue_transition(ctx, t, data_for(t));
        CHECK(ctx.state == it->second);
        CHECK(ue_invariants_hold(ctx));
      }
    }
  }
}

TEST_CASE("a full attach walks clean through the machine") {
  UeContext c;
  ue_transition(c, UeTrigger::PROBE_SENT);
  ue_transition(c, UeTrigger::ASSOC_OK);
  ue_transition(c, UeTrigger::AUTH_START, {.ap = 3});
  CHECK(c.serving_ap == 3);
  ue_transition(c, UeTrigger::AUTH_OK);
  ue_transition(c, UeTrigger::SESSION_OK, {.tunnel_id = 99, .wae = 1});
  CHECK(c.state == UeState::SESSION_ACTIVE);
  CHECK(c.tunnel_id == 99);
  CHECK(c.anchor_wae == 1);
  CHECK(ue_invariants_hold(c));
}

TEST_CASE("handover keeps session and anchor") {
  UeContext c = make_ctx(UeState::SESSION_ACTIVE);
  ue_transition(c, UeTrigger::STEER);
  CHECK(c.state == UeState::HANDOVER);
  CHECK(c.serving_ap == 1);
  CHECK(c.tunnel_id == 7);
  ue_transition(c, UeTrigger::HO_DONE, {.ap = 2});
  CHECK(c.state == UeState::SESSION_ACTIVE);
  CHECK(c.serving_ap == 2);
  CHECK(c.tunnel_id == 7);
  CHECK(c.anchor_wae == 0);
}

TEST_CASE("anchor is write-once and survives detach") {
  UeContext c = make_ctx(UeState::REGISTERED);
  c.anchor_wae = 5;
  ue_transition(c, UeTrigger::SESSION_OK, {.tunnel_id = 11, .wae = 9});
  CHECK(c.anchor_wae == 5);  // an existing anchor is never overwritten

  ue_transition(c, UeTrigger::DETACH);
  CHECK(c.state == UeState::IDLE);
  CHECK_FALSE(c.serving_ap.has_value());
  CHECK_FALSE(c.tunnel_id.has_value());
  CHECK(c.anchor_wae == 5);
}

TEST_CASE("failed auth clears the radio leg and counts") {
  UeContext c = make_ctx(UeState::AUTHENTICATING);
  ue_transition(c, UeTrigger::AUTH_FAIL);
  CHECK(c.state == UeState::IDLE);
  CHECK_FALSE(c.serving_ap.has_value());
  CHECK(c.auth_attempts == 1);
  CHECK(ue_invariants_hold(c));
}

TEST_CASE("triggers that need data reject its absence") {
  UeContext c = make_ctx(UeState::ASSOCIATING);
  CHECK_THROWS_AS(ue_transition(c, UeTrigger::AUTH_START), IllegalTransition);
  UeContext r = make_ctx(UeState::REGISTERED);
  CHECK_THROWS_AS(ue_transition(r, UeTrigger::SESSION_OK), IllegalTransition);
  UeContext h = make_ctx(UeState::HANDOVER);
  CHECK_THROWS_AS(ue_transition(h, UeTrigger::HO_DONE), IllegalTransition);
}
