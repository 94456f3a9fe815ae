// SPDX-License-Identifier: Apache-2.0
#include "wlansdn/cmi.hpp"

#include <map>

namespace wlansdn::cmi {

const char* to_string(MsgType t) {
  switch (t) {
    case MsgType::HELLO: return "HELLO";
    case MsgType::HELLO_ACK: return "HELLO_ACK";
    case MsgType::CONFIG_SET: return "CONFIG_SET";
    case MsgType::CONFIG_ACK: return "CONFIG_ACK";
    case MsgType::CONFIG_GET: return "CONFIG_GET";
    case MsgType::FLOW_ADD: return "FLOW_ADD";
    case MsgType::FLOW_MOD: return "FLOW_MOD";
    case MsgType::FLOW_DEL: return "FLOW_DEL";
    case MsgType::FLOW_ACK: return "FLOW_ACK";
    case MsgType::STATS_REPORT: return "STATS_REPORT";
    case MsgType::STATS_SUBSCRIBE: return "STATS_SUBSCRIBE";
    case MsgType::UE_STEER: return "UE_STEER";
    case MsgType::CHANNEL_SET: return "CHANNEL_SET";
    case MsgType::MGMT_POLICY_SET: return "MGMT_POLICY_SET";
    case MsgType::SLICE_CREATE: return "SLICE_CREATE";
    case MsgType::SLICE_READ: return "SLICE_READ";
    case MsgType::SLICE_UPDATE: return "SLICE_UPDATE";
    case MsgType::SLICE_DELETE: return "SLICE_DELETE";
    case MsgType::SLICE_ACK: return "SLICE_ACK";
    case MsgType::SESSION_NOTIFY: return "SESSION_NOTIFY";
    case MsgType::ERROR: return "ERROR";
  }
  return "?";
}

std::optional<MsgType> msg_type_from_byte(std::uint8_t b) {
  switch (b) {
    case 0x01: case 0x02:
    case 0x10: case 0x11: case 0x12:
    case 0x20: case 0x21: case 0x22: case 0x23:
    case 0x30: case 0x31:
    case 0x40: case 0x41: case 0x42:
    case 0x50: case 0x51: case 0x52: case 0x53: case 0x54:
    case 0x61:
    case 0x7F:
      return static_cast<MsgType>(b);
    default:
      return std::nullopt;
  }
}

const char* to_string(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::Message: return "Message";
    case DecodeStatus::NeedMoreBytes: return "NeedMoreBytes";
    case DecodeStatus::BadVersion: return "BadVersion";
    case DecodeStatus::UnknownMsgType: return "UnknownMsgType";
    case DecodeStatus::MalformedPayload: return "MalformedPayload";
    case DecodeStatus::FrameTooLarge: return "FrameTooLarge";
  }
  return "?";
}

std::string canonical_json(const json& j) {
  // nlohmann keeps object members in a std::map, so dump() already emits
  // keys in lexicographic order with no whitespace.
  return j.dump();
}

namespace {

enum class FieldKind : std::uint8_t { Str, Uint, Num, Bool, Arr, Obj };

using FieldTable = std::map<std::string, FieldKind>;

const FieldTable& fields_for(MsgType type) {
  static const std::map<MsgType, FieldTable> tables = {
      {MsgType::HELLO,
       {{"controller_id", FieldKind::Str}, {"proto_version", FieldKind::Uint}}},
      {MsgType::HELLO_ACK,
       {{"wae_id", FieldKind::Uint}, {"ap_count", FieldKind::Uint}}},
      {MsgType::CONFIG_SET,
       {{"ap", FieldKind::Uint},
        {"channel", FieldKind::Uint},
        {"tx_power_dbm", FieldKind::Num},
        {"suppress_probe_above_load", FieldKind::Uint},
        {"deny_list", FieldKind::Arr}}},
      {MsgType::CONFIG_ACK,
       {{"ok", FieldKind::Bool},
        {"what", FieldKind::Str},
        {"flows", FieldKind::Arr},
        {"detail", FieldKind::Str}}},
      {MsgType::CONFIG_GET,
       {{"what", FieldKind::Str}, {"ap", FieldKind::Uint}}},
      {MsgType::FLOW_ADD,
       {{"rule_id", FieldKind::Uint},
        {"ue", FieldKind::Uint},
        {"traffic_class", FieldKind::Str},
        {"out", FieldKind::Str},
        {"ap", FieldKind::Uint},
        {"rate_mbps", FieldKind::Num},
        {"priority", FieldKind::Uint},
        {"latency_budget_us", FieldKind::Uint},
        {"slice_id", FieldKind::Str}}},
      {MsgType::FLOW_MOD,
       {{"rule_id", FieldKind::Uint},
        {"ue", FieldKind::Uint},
        {"traffic_class", FieldKind::Str},
        {"out", FieldKind::Str},
        {"ap", FieldKind::Uint},
        {"rate_mbps", FieldKind::Num},
        {"priority", FieldKind::Uint},
        {"latency_budget_us", FieldKind::Uint},
        {"slice_id", FieldKind::Str}}},
      {MsgType::FLOW_DEL, {{"rule_id", FieldKind::Uint}}},
      {MsgType::FLOW_ACK,
       {{"rule_id", FieldKind::Uint},
        {"ok", FieldKind::Bool},
        {"detail", FieldKind::Str}}},
      {MsgType::STATS_REPORT,
       {{"time_us", FieldKind::Uint},
        {"aps", FieldKind::Arr},
        {"ue_rssi", FieldKind::Arr}}},
      {MsgType::STATS_SUBSCRIBE, {{"period_us", FieldKind::Uint}}},
      {MsgType::UE_STEER,
       {{"ue", FieldKind::Uint}, {"target_ap", FieldKind::Uint}}},
      {MsgType::CHANNEL_SET,
       {{"ap", FieldKind::Uint}, {"channel", FieldKind::Uint}}},
      {MsgType::MGMT_POLICY_SET,
       {{"ap", FieldKind::Uint},
        {"suppress_probe_above_load", FieldKind::Uint},
        {"deny_list", FieldKind::Arr}}},
      {MsgType::SLICE_CREATE,
       {{"slice_id", FieldKind::Str},
        {"weight", FieldKind::Uint},
        {"rate_cap_mbps", FieldKind::Num},
        {"ues", FieldKind::Arr},
        {"traffic_classes", FieldKind::Arr}}},
      {MsgType::SLICE_READ, {{"slice_id", FieldKind::Str}}},
      {MsgType::SLICE_UPDATE,
       {{"slice_id", FieldKind::Str},
        {"weight", FieldKind::Uint},
        {"rate_cap_mbps", FieldKind::Num},
        {"ues", FieldKind::Arr},
        {"traffic_classes", FieldKind::Arr}}},
      {MsgType::SLICE_DELETE,
       {{"slice_id", FieldKind::Str}, {"force", FieldKind::Bool}}},
      {MsgType::SLICE_ACK,
       {{"slice_id", FieldKind::Str},
        {"ok", FieldKind::Bool},
        {"detail", FieldKind::Str},
        {"slice", FieldKind::Obj}}},
      {MsgType::SESSION_NOTIFY,
       {{"ue", FieldKind::Uint},
        {"tunnel_id", FieldKind::Uint},
        {"rate_mbps", FieldKind::Num},
        {"priority", FieldKind::Uint},
        {"latency_budget_us", FieldKind::Uint}}},
      {MsgType::ERROR,
       {{"code", FieldKind::Str}, {"detail", FieldKind::Str}}},
  };
  return tables.at(type);
}

bool kind_matches(FieldKind kind, const json& v) {
  switch (kind) {
    case FieldKind::Str: return v.is_string();
    case FieldKind::Uint:
      return v.is_number_unsigned() ||
             (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    case FieldKind::Num: return v.is_number();
    case FieldKind::Bool: return v.is_boolean();
    case FieldKind::Arr: return v.is_array();
    case FieldKind::Obj: return v.is_object();
  }
  return false;
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

std::uint64_t read_be64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

const char* schema_check(MsgType type, const json& payload) {
  if (!payload.is_object()) return "payload is not a JSON object";
  const FieldTable& table = fields_for(type);
  for (auto it = payload.begin(); it != payload.end(); ++it) {
    auto f = table.find(it.key());
    if (f == table.end()) return "unknown payload field";
    if (!kind_matches(f->second, it.value())) return "payload field has wrong type";
  }
  return nullptr;
}

std::vector<std::uint8_t> encode_frame(const CmiMessage& msg) {
  if (msg.version != kProtoVersion) throw SchemaViolation("unsupported version");
  if (const char* err = schema_check(msg.type, msg.payload)) {
    throw SchemaViolation(std::string(to_string(msg.type)) + ": " + err);
  }
  std::string body_json = canonical_json(msg.payload);
  std::uint64_t body_len = 10 + body_json.size();
  if (body_len > kMaxFrameBytes) throw SchemaViolation("frame exceeds size cap");

  std::vector<std::uint8_t> out;
  out.reserve(4 + body_len);
  put_be32(out, static_cast<std::uint32_t>(body_len));
  out.push_back(msg.version);
  out.push_back(static_cast<std::uint8_t>(msg.type));
  for (int i = 7; i >= 0; --i) {
    out.push_back(static_cast<std::uint8_t>(msg.correlation_id >> (8 * i)));
  }
  out.insert(out.end(), body_json.begin(), body_json.end());
  return out;
}

DecodeResult decode_frame(std::span<const std::uint8_t> bytes) {
  DecodeResult r;
  if (bytes.size() < 4) return r;  // NeedMoreBytes, consumed 0
  std::uint32_t len = read_be32(bytes.data());
  if (len > kMaxFrameBytes) {
    r.status = DecodeStatus::FrameTooLarge;
    r.consumed = std::min<std::size_t>(bytes.size(), 4ull + len);
    return r;
  }
  std::size_t frame = 4ull + len;
  if (bytes.size() < frame) return r;  // NeedMoreBytes

  r.consumed = frame;
  // Body must at least hold version, type and the correlation id.
  if (len < 10) {
    r.status = DecodeStatus::MalformedPayload;
    return r;
  }
  const std::uint8_t* body = bytes.data() + 4;
  if (body[0] != kProtoVersion) {
    r.status = DecodeStatus::BadVersion;
    return r;
  }
  auto type = msg_type_from_byte(body[1]);
  if (!type) {
    r.status = DecodeStatus::UnknownMsgType;
    return r;
  }
  json payload = json::parse(body + 10, body + len, nullptr, false);
  if (payload.is_discarded() || schema_check(*type, payload) != nullptr) {
    r.status = DecodeStatus::MalformedPayload;
    return r;
  }
  r.status = DecodeStatus::Message;
  r.message = CmiMessage{body[0], *type, read_be64(body + 2), std::move(payload)};
  return r;
}

void StreamDecoder::drain_skip() {
  if (skip_remaining_ == 0 || buffer_.empty()) return;
  std::uint64_t n = std::min<std::uint64_t>(skip_remaining_, buffer_.size());
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(n));
  skip_remaining_ -= n;
  total_consumed_ += n;
}

void StreamDecoder::feed(std::span<const std::uint8_t> bytes) {
  total_fed_ += bytes.size();
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  drain_skip();
}

std::optional<DecodeResult> StreamDecoder::next() {
  drain_skip();
  if (skip_remaining_ > 0) return std::nullopt;  // still inside a skipped frame
  if (buffer_.size() < 4) return std::nullopt;
  std::uint32_t len = read_be32(buffer_.data());
  if (len > kMaxFrameBytes) {
    // Report once, then swallow the frame body as it streams in.
    skip_remaining_ = 4ull + len;
    drain_skip();
    DecodeResult r;
    r.status = DecodeStatus::FrameTooLarge;
    return r;
  }
  if (buffer_.size() < 4ull + len) return std::nullopt;
  DecodeResult r = decode_frame(std::span(buffer_.data(), 4ull + len));
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(r.consumed));
  total_consumed_ += r.consumed;
  return r;
}

}  // namespace wlansdn::cmi
