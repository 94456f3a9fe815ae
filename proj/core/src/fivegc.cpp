// SPDX-License-Identifier: Apache-2.0
#include "wlansdn/fivegc.hpp"

#include <algorithm>
#include <cstring>

#include "wlansdn/sha256.hpp"

namespace wlansdn::fivegc {

AuthResponse auth_response(const AuthKey& key, const Nonce& nonce) {
  std::array<std::uint8_t, 32> material;
  std::memcpy(material.data(), key.data(), 16);
  std::memcpy(material.data() + 16, nonce.data(), 16);
  auto digest = sha256(material);
  AuthResponse out;
  std::memcpy(out.data(), digest.data(), 16);
  return out;
}

std::vector<std::uint8_t> NasMsg::encode() const {
  std::vector<std::uint8_t> out;
  out.reserve(5 + body.size());
  out.push_back(static_cast<std::uint8_t>(tag));
  out.push_back(static_cast<std::uint8_t>(ue >> 24));
  out.push_back(static_cast<std::uint8_t>(ue >> 16));
  out.push_back(static_cast<std::uint8_t>(ue >> 8));
  out.push_back(static_cast<std::uint8_t>(ue));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

std::optional<NasMsg> NasMsg::decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 5) return std::nullopt;
  std::uint8_t t = bytes[0];
  if (t < 0x01 || t > 0x05) return std::nullopt;
  NasMsg m;
  m.tag = static_cast<NasTag>(t);
  m.ue = (std::uint32_t{bytes[1]} << 24) | (std::uint32_t{bytes[2]} << 16) |
         (std::uint32_t{bytes[3]} << 8) | std::uint32_t{bytes[4]};
  m.body.assign(bytes.begin() + 5, bytes.end());
  switch (m.tag) {
    case NasTag::REGISTER:
    case NasTag::REJECT:
      if (!m.body.empty()) return std::nullopt;
      break;
    case NasTag::CHALLENGE:
    case NasTag::RESPONSE:
      if (m.body.size() != 16) return std::nullopt;
      break;
    case NasTag::ACCEPT:
      if (m.body.size() != 8) return std::nullopt;
      break;
  }
  return m;
}

NasMsg nas_register(std::uint32_t ue) { return {NasTag::REGISTER, ue, {}}; }

NasMsg nas_challenge(std::uint32_t ue, const Nonce& nonce) {
  return {NasTag::CHALLENGE, ue, {nonce.begin(), nonce.end()}};
}

NasMsg nas_response(std::uint32_t ue, const AuthResponse& resp) {
  return {NasTag::RESPONSE, ue, {resp.begin(), resp.end()}};
}

NasMsg nas_accept(std::uint32_t ue, std::uint64_t tunnel_id) {
  NasMsg m{NasTag::ACCEPT, ue, {}};
  for (int i = 7; i >= 0; --i) {
    m.body.push_back(static_cast<std::uint8_t>(tunnel_id >> (8 * i)));
  }
  return m;
}

NasMsg nas_reject(std::uint32_t ue) { return {NasTag::REJECT, ue, {}}; }

std::optional<Nonce> nonce_of(const NasMsg& m) {
  if (m.tag != NasTag::CHALLENGE || m.body.size() != 16) return std::nullopt;
  Nonce n;
  std::copy(m.body.begin(), m.body.end(), n.begin());
  return n;
}

std::optional<AuthResponse> response_of(const NasMsg& m) {
  if (m.tag != NasTag::RESPONSE || m.body.size() != 16) return std::nullopt;
  AuthResponse r;
  std::copy(m.body.begin(), m.body.end(), r.begin());
  return r;
}

std::optional<std::uint64_t> tunnel_of(const NasMsg& m) {
  if (m.tag != NasTag::ACCEPT || m.body.size() != 8) return std::nullopt;
  std::uint64_t v = 0;
  for (std::uint8_t b : m.body) v = (v << 8) | b;
  return v;
}

const UpfSession& Upf::create_session(std::uint32_t ue, const QosProfile& qos) {
  auto it = sessions_.find(ue);
  if (it != sessions_.end()) return it->second;
  UpfSession s;
  s.tunnel_id = next_tunnel_++;
  s.ue = ue;
  s.qos = qos;
  return sessions_.emplace(ue, s).first->second;
}

bool Upf::release_session(std::uint32_t ue) { return sessions_.erase(ue) > 0; }

std::optional<UpfSession> Upf::by_ue(std::uint32_t ue) const {
  auto it = sessions_.find(ue);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

std::optional<UpfSession> Upf::by_tunnel(std::uint64_t tunnel_id) const {
  for (const auto& [ue, s] : sessions_) {
    if (s.tunnel_id == tunnel_id) return s;
  }
  return std::nullopt;
}

void Amf::provision(std::uint32_t ue, const AuthKey& key) { keys_[ue] = key; }

Amf::Result Amf::on_nas(const NasMsg& msg) {
  Result r;
  switch (msg.tag) {
    case NasTag::REGISTER: {
      auto key = keys_.find(msg.ue);
      if (key == keys_.end()) {
        rejects += 1;
        r.reply = nas_reject(msg.ue);
        return r;
      }
      UeAuth& a = auth_[msg.ue];
      a.state = AmfUeState::CHALLENGED;
      rng_.fill(a.nonce.data(), a.nonce.size());
      challenges_sent += 1;
      r.reply = nas_challenge(msg.ue, a.nonce);
      return r;
    }
    case NasTag::RESPONSE: {
      auto a = auth_.find(msg.ue);
      auto key = keys_.find(msg.ue);
      auto given = response_of(msg);
      if (a == auth_.end() || a->second.state != AmfUeState::CHALLENGED ||
          key == keys_.end() || !given ||
          *given != auth_response(key->second, a->second.nonce)) {
        if (a != auth_.end()) a->second.state = AmfUeState::NONE;
        rejects += 1;
        r.reply = nas_reject(msg.ue);
        return r;
      }
      a->second.state = AmfUeState::REGISTERED;
      accepts += 1;
      const UpfSession& s = upf_.create_session(msg.ue, session_qos_);
      r.reply = nas_accept(msg.ue, s.tunnel_id);
      r.setup = SessionSetup{msg.ue, s.tunnel_id, s.qos};
      return r;
    }
    default:
      // Terminal-bound tags arriving here point at a relay bug.
      rejects += 1;
      r.reply = nas_reject(msg.ue);
      return r;
  }
}

AmfUeState Amf::state(std::uint32_t ue) const {
  auto it = auth_.find(ue);
  return it == auth_.end() ? AmfUeState::NONE : it->second.state;
}

void Amf::drop(std::uint32_t ue) { auth_.erase(ue); }

}  // namespace wlansdn::fivegc
