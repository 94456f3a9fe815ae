// SPDX-License-Identifier: Apache-2.0
#ifndef WLANSDN_CMI_HPP
#define WLANSDN_CMI_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace wlansdn::cmi {

using json = nlohmann::json;

inline constexpr std::uint8_t kProtoVersion = 1;
// Hard cap on the body length field; larger frames are skipped, not parsed.
inline constexpr std::uint32_t kMaxFrameBytes = 1u << 20;

enum class MsgType : std::uint8_t {
  HELLO = 0x01,
  HELLO_ACK = 0x02,
  CONFIG_SET = 0x10,
  CONFIG_ACK = 0x11,
  CONFIG_GET = 0x12,
  FLOW_ADD = 0x20,
  FLOW_MOD = 0x21,
  FLOW_DEL = 0x22,
  FLOW_ACK = 0x23,
  STATS_REPORT = 0x30,
  STATS_SUBSCRIBE = 0x31,
  UE_STEER = 0x40,
  CHANNEL_SET = 0x41,
  MGMT_POLICY_SET = 0x42,
  SLICE_CREATE = 0x50,
  SLICE_READ = 0x51,
  SLICE_UPDATE = 0x52,
  SLICE_DELETE = 0x53,
  SLICE_ACK = 0x54,
  SESSION_NOTIFY = 0x61,
  ERROR = 0x7F,
};

const char* to_string(MsgType t);
std::optional<MsgType> msg_type_from_byte(std::uint8_t b);

struct CmiMessage {
  std::uint8_t version = kProtoVersion;
  MsgType type = MsgType::HELLO;
  std::uint64_t correlation_id = 0;
  json payload = json::object();
};

// Compact serialization with lexicographically ordered keys; both encode
// and the determinism digest depend on this being byte-stable.
std::string canonical_json(const json& j);

class SchemaViolation : public std::runtime_error {
 public:
  explicit SchemaViolation(const std::string& what) : std::runtime_error(what) {}
};

// Returns nullptr when the payload passes the per-type field table,
// otherwise a static description of the first offense. Known fields are
// optional but type-checked; unknown fields are rejected.
const char* schema_check(MsgType type, const json& payload);

// Frame layout: u32 big-endian body length, then the body:
// version byte, msg_type byte, u64 big-endian correlation id, JSON payload.
std::vector<std::uint8_t> encode_frame(const CmiMessage& msg);

enum class DecodeStatus : std::uint8_t {
  Message,
  NeedMoreBytes,
  BadVersion,
  UnknownMsgType,
  MalformedPayload,
  FrameTooLarge,
};

const char* to_string(DecodeStatus s);

struct DecodeResult {
  DecodeStatus status = DecodeStatus::NeedMoreBytes;
  std::optional<CmiMessage> message;  // set only for DecodeStatus::Message
  std::size_t consumed = 0;
};

// Stateless single-frame decode. NeedMoreBytes consumes nothing; every
// other status consumes the whole frame it examined. FrameTooLarge is
// reported from the header alone and consumes what is present, so
// incremental callers should prefer StreamDecoder.
DecodeResult decode_frame(std::span<const std::uint8_t> bytes);

// Incremental frame extractor over an arbitrary-split byte stream.
// Oversized frames are skipped without buffering their body.
// Invariant: total_fed() == total_consumed() + buffered().
class StreamDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  // Next decode event, or empty while a complete frame is not available.
  std::optional<DecodeResult> next();

  std::uint64_t total_fed() const { return total_fed_; }
  std::uint64_t total_consumed() const { return total_consumed_; }
  std::size_t buffered() const { return buffer_.size(); }

 private:
  void drain_skip();

  std::vector<std::uint8_t> buffer_;
  std::uint64_t skip_remaining_ = 0;
  std::uint64_t total_fed_ = 0;
  std::uint64_t total_consumed_ = 0;
};

}  // namespace wlansdn::cmi

#endif  // WLANSDN_CMI_HPP
