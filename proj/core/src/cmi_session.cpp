// SPDX-License-Identifier: Apache-2.0
#include "wlansdn/cmi_session.hpp"

namespace wlansdn::cmi {

CmiSession::CmiSession(Config cfg) : cfg_(std::move(cfg)) {}

std::vector<std::uint8_t> CmiSession::start() {
  if (cfg_.role != Role::Controller) {
    throw HandshakeError("only the controller side sends HELLO");
  }
  if (started_) throw HandshakeError("session already started");
  started_ = true;
  CmiMessage hello;
  hello.type = MsgType::HELLO;
  hello.correlation_id = 0;
  hello.payload = {{"controller_id", cfg_.controller_id},
                   {"proto_version", kProtoVersion}};
  return encode_frame(hello);
}

CmiSession::Outcome CmiSession::on_bytes(std::span<const std::uint8_t> bytes) {
  Outcome out;
  decoder_.feed(bytes);
  while (auto r = decoder_.next()) {
    if (r->status != DecodeStatus::Message) {
      if (!established_) {
        throw HandshakeError(std::string("decode failure before handshake: ") +
                             to_string(r->status));
      }
      out.decode_errors.push_back(r->status);
      continue;
    }
    CmiMessage& msg = *r->message;
    if (established_) {
      out.delivered.push_back(std::move(msg));
      continue;
    }
    if (cfg_.role == Role::Agent) {
      if (msg.type != MsgType::HELLO) {
        throw HandshakeError(std::string("expected HELLO, got ") +
                             to_string(msg.type));
      }
      if (msg.payload.contains("proto_version") &&
          msg.payload["proto_version"].get<std::uint64_t>() != kProtoVersion) {
        throw HandshakeError("peer speaks an unsupported protocol version");
      }
      CmiMessage ack;
      ack.type = MsgType::HELLO_ACK;
      ack.correlation_id = msg.correlation_id;
      ack.payload = {{"wae_id", cfg_.wae_id}, {"ap_count", cfg_.ap_count}};
      out.to_send.push_back(encode_frame(ack));
      established_ = true;
    } else {
      if (msg.type != MsgType::HELLO_ACK) {
        throw HandshakeError(std::string("expected HELLO_ACK, got ") +
                             to_string(msg.type));
      }
      if (msg.payload.contains("wae_id")) {
        peer_wae_id_ = msg.payload["wae_id"].get<std::uint32_t>();
      }
      if (msg.payload.contains("ap_count")) {
        peer_ap_count_ = msg.payload["ap_count"].get<std::uint32_t>();
      }
      established_ = true;
    }
  }
  return out;
}

std::vector<std::uint8_t> CmiSession::encode(MsgType type, json payload,
                                             std::uint64_t correlation_id) const {
  CmiMessage msg;
  msg.type = type;
  msg.correlation_id = correlation_id;
  msg.payload = std::move(payload);
  return encode_frame(msg);
}

}  // namespace wlansdn::cmi
