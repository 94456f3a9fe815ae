// SPDX-License-Identifier: Apache-2.0
#ifndef WLANSDN_CMI_SESSION_HPP
#define WLANSDN_CMI_SESSION_HPP

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wlansdn/cmi.hpp"

namespace wlansdn::cmi {

class HandshakeError : public std::runtime_error {
 public:
  explicit HandshakeError(const std::string& what) : std::runtime_error(what) {}
};

// One end of a control channel. The controller side opens with HELLO and
// waits for HELLO_ACK; the agent side answers the HELLO. Until that
// exchange completes, any other traffic is a protocol breach.
class CmiSession {
 public:
  enum class Role { Controller, Agent };

  struct Config {
    Role role = Role::Controller;
    std::string controller_id = "ctrl";  // controller side only
    std::uint32_t wae_id = 0;            // agent side only
    std::uint32_t ap_count = 0;          // agent side only
  };

  explicit CmiSession(Config cfg);

  // Controller only: the opening HELLO frame.
  std::vector<std::uint8_t> start();

  struct Outcome {
    std::vector<std::vector<std::uint8_t>> to_send;
    std::vector<CmiMessage> delivered;
    std::vector<DecodeStatus> decode_errors;
  };

  // Feeds peer bytes through the stream decoder, runs the handshake,
  // and hands every post-handshake message to the caller.
  // Throws HandshakeError on any pre-establishment protocol breach.
  Outcome on_bytes(std::span<const std::uint8_t> bytes);

  bool established() const { return established_; }
  std::uint32_t peer_wae_id() const { return peer_wae_id_; }
  std::uint32_t peer_ap_count() const { return peer_ap_count_; }

  // Correlation ids are unique and monotonic per session; 0 is the HELLO.
  std::uint64_t next_correlation() { return next_corr_++; }

  std::vector<std::uint8_t> encode(MsgType type, json payload,
                                   std::uint64_t correlation_id) const;

 private:
  Config cfg_;
  StreamDecoder decoder_;
  bool started_ = false;
  bool established_ = false;
  std::uint64_t next_corr_ = 1;
  std::uint32_t peer_wae_id_ = 0;
  std::uint32_t peer_ap_count_ = 0;
};

}  // namespace wlansdn::cmi

#endif  // WLANSDN_CMI_SESSION_HPP
