// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "wlansdn/cmi_session.hpp"

#include <vector>

using namespace wlansdn::cmi;

namespace {

CmiSession make_controller() {
  CmiSession::Config cfg;
  cfg.role = CmiSession::Role::Controller;
  cfg.controller_id = "ctrl-0";
  return CmiSession(cfg);
}

CmiSession make_agent(std::uint32_t wae_id = 1, std::uint32_t ap_count = 4) {
  CmiSession::Config cfg;
  cfg.role = CmiSession::Role::Agent;
  cfg.wae_id = wae_id;
  cfg.ap_count = ap_count;
  return CmiSession(cfg);
}

}  // namespace

TEST_CASE("controller and agent shake hands") {
  CmiSession ctrl = make_controller();
  CmiSession agent = make_agent(3, 7);

  auto hello = ctrl.start();
  CHECK_FALSE(ctrl.established());

  auto agent_out = agent.on_bytes(hello);
  CHECK(agent.established());
  REQUIRE(agent_out.to_send.size() == 1);
  CHECK(agent_out.delivered.empty());

  auto ctrl_out = ctrl.on_bytes(agent_out.to_send[0]);
  CHECK(ctrl.established());
  CHECK(ctrl_out.delivered.empty());
  CHECK(ctrl.peer_wae_id() == 3);
  CHECK(ctrl.peer_ap_count() == 7);
}

TEST_CASE("agent refuses anything but HELLO first") {
  CmiSession agent = make_agent();
  CmiMessage m;
  m.type = MsgType::FLOW_DEL;
  m.correlation_id = 1;
  m.payload = {{"rule_id", 1}};
  CHECK_THROWS_AS(agent.on_bytes(encode_frame(m)), HandshakeError);
}

TEST_CASE("controller refuses anything but HELLO_ACK first") {
  CmiSession ctrl = make_controller();
  (void)ctrl.start();
  CmiMessage m;
  m.type = MsgType::STATS_REPORT;
  m.correlation_id = 1;
  CHECK_THROWS_AS(ctrl.on_bytes(encode_frame(m)), HandshakeError);
}

TEST_CASE("agent refuses a foreign protocol version in HELLO") {
  CmiSession agent = make_agent();
  CmiMessage hello;
  hello.type = MsgType::HELLO;
  hello.correlation_id = 0;
  hello.payload = {{"controller_id", "ctrl-9"}, {"proto_version", 2}};
  CHECK_THROWS_AS(agent.on_bytes(encode_frame(hello)), HandshakeError);
}

TEST_CASE("decode failures before establishment are fatal") {
  CmiSession agent = make_agent();
  std::vector<std::uint8_t> junk = {0x00, 0x00, 0x00, 0x0C, 0x09, 0x01, 0x00,
                                    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
                                    0x7B, 0x7D};
  CHECK_THROWS_AS(agent.on_bytes(junk), HandshakeError);
}

TEST_CASE("messages flow after establishment and errors are soft") {
  CmiSession ctrl = make_controller();
  CmiSession agent = make_agent();
  auto r1 = agent.on_bytes(ctrl.start());
  (void)ctrl.on_bytes(r1.to_send[0]);

  auto corr = ctrl.next_correlation();
  CHECK(corr == 1);
  auto bytes = ctrl.encode(MsgType::CHANNEL_SET, {{"ap", 0}, {"channel", 11}}, corr);
  auto out = agent.on_bytes(bytes);
  REQUIRE(out.delivered.size() == 1);
  CHECK(out.delivered[0].type == MsgType::CHANNEL_SET);
  CHECK(out.delivered[0].correlation_id == 1);

  // A post-handshake decode failure is reported, not thrown.
  std::vector<std::uint8_t> junk = {0x00, 0x00, 0x00, 0x0C, 0x01, 0xEE, 0x00,
                                    0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
                                    0x7B, 0x7D};
  auto out2 = agent.on_bytes(junk);
  CHECK(out2.delivered.empty());
  REQUIRE(out2.decode_errors.size() == 1);
  CHECK(out2.decode_errors[0] == DecodeStatus::UnknownMsgType);

  // Correlation ids keep climbing and never repeat.
  CHECK(ctrl.next_correlation() == 2);
  CHECK(ctrl.next_correlation() == 3);
}

TEST_CASE("split delivery still completes the handshake") {
  CmiSession ctrl = make_controller();
  CmiSession agent = make_agent();
  auto hello = ctrl.start();
  // One byte at a time.
  CmiSession::Outcome last;
  for (std::uint8_t b : hello) {
    last = agent.on_bytes(std::span(&b, 1));
  }
  CHECK(agent.established());
  REQUIRE(last.to_send.size() == 1);
}
