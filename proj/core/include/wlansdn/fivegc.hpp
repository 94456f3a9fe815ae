// SPDX-License-Identifier: Apache-2.0
#ifndef WLANSDN_FIVEGC_HPP
#define WLANSDN_FIVEGC_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "wlansdn/domain.hpp"
#include "wlansdn/rng.hpp"

namespace wlansdn::fivegc {

using AuthKey = std::array<std::uint8_t, 16>;
using Nonce = std::array<std::uint8_t, 16>;
using AuthResponse = std::array<std::uint8_t, 16>;

// Challenge response: the first half of SHA-256(key || nonce).
AuthResponse auth_response(const AuthKey& key, const Nonce& nonce);

enum class NasTag : std::uint8_t {
  REGISTER = 0x01,
  CHALLENGE = 0x02,
  RESPONSE = 0x03,
  ACCEPT = 0x04,
  REJECT = 0x05,
};

// Control message between a terminal and the registration function. The
// relay path must never inspect or rewrite these bytes.
struct NasMsg {
  NasTag tag = NasTag::REGISTER;
  std::uint32_t ue = 0;
  std::vector<std::uint8_t> body;  // tag-specific extra bytes

  std::vector<std::uint8_t> encode() const;
  static std::optional<NasMsg> decode(std::span<const std::uint8_t> bytes);
};

NasMsg nas_register(std::uint32_t ue);
NasMsg nas_challenge(std::uint32_t ue, const Nonce& nonce);
NasMsg nas_response(std::uint32_t ue, const AuthResponse& resp);
NasMsg nas_accept(std::uint32_t ue, std::uint64_t tunnel_id);
NasMsg nas_reject(std::uint32_t ue);

std::optional<Nonce> nonce_of(const NasMsg& m);
std::optional<AuthResponse> response_of(const NasMsg& m);
std::optional<std::uint64_t> tunnel_of(const NasMsg& m);

struct UpfSession {
  std::uint64_t tunnel_id = 0;
  std::uint32_t ue = 0;
  QosProfile qos;
};

// User-plane anchor: owns the tunnel table.
class Upf {
 public:
  // Idempotent: a second create for the same terminal returns the
  // existing session untouched.
  const UpfSession& create_session(std::uint32_t ue,
                                   const QosProfile& qos = QosProfile{});
  bool release_session(std::uint32_t ue);
  std::optional<UpfSession> by_ue(std::uint32_t ue) const;
  std::optional<UpfSession> by_tunnel(std::uint64_t tunnel_id) const;
  const std::map<std::uint32_t, UpfSession>& sessions() const { return sessions_; }

  std::uint64_t unknown_tunnel_drops = 0;

 private:
  std::map<std::uint32_t, UpfSession> sessions_;
  std::uint64_t next_tunnel_ = 1;
};

enum class AmfUeState : std::uint8_t { NONE, CHALLENGED, REGISTERED };

// Registration function: challenge-response over provisioned keys, then
// a session on the user-plane anchor.
class Amf {
 public:
  Amf(Upf& upf, Rng nonce_rng) : upf_(upf), rng_(nonce_rng) {}

  void provision(std::uint32_t ue, const AuthKey& key);
  // Profile handed to the user-plane anchor for new sessions.
  void set_session_qos(const QosProfile& qos) { session_qos_ = qos; }

  struct SessionSetup {
    std::uint32_t ue = 0;
    std::uint64_t tunnel_id = 0;
    QosProfile qos;
  };
  struct Result {
    std::optional<NasMsg> reply;
    std::optional<SessionSetup> setup;  // set on a fresh successful auth
  };

  Result on_nas(const NasMsg& msg);

  AmfUeState state(std::uint32_t ue) const;
  // Detach: forgets registration state, keys stay provisioned.
  void drop(std::uint32_t ue);

  std::uint64_t challenges_sent = 0;
  std::uint64_t accepts = 0;
  std::uint64_t rejects = 0;

 private:
  struct UeAuth {
    AmfUeState state = AmfUeState::NONE;
    Nonce nonce{};
  };

  Upf& upf_;
  Rng rng_;
  QosProfile session_qos_;
  std::map<std::uint32_t, AuthKey> keys_;
  std::map<std::uint32_t, UeAuth> auth_;
};

}  // namespace wlansdn::fivegc

#endif  // WLANSDN_FIVEGC_HPP
