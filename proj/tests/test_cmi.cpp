// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "wlansdn/cmi.hpp"
#include "wlansdn/rng.hpp"

#include <algorithm>
#include <string>
#include <vector>

using namespace wlansdn::cmi;
using wlansdn::Rng;

namespace {

// Reference encoder built from the wire contract by hand, sharing no code
// with the library path. Payload text must already be canonical.
std::vector<std::uint8_t> ref_frame(std::uint8_t version, std::uint8_t type,
                                    std::uint64_t corr,
                                    const std::string& payload_text) {
  std::vector<std::uint8_t> out;
  std::uint32_t len = static_cast<std::uint32_t>(10 + payload_text.size());
  out.push_back(static_cast<std::uint8_t>((len >> 24) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((len >> 16) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((len >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>(len & 0xFF));
  out.push_back(version);
  out.push_back(type);
  for (int i = 7; i >= 0; --i) {
    out.push_back(static_cast<std::uint8_t>((corr >> (8 * i)) & 0xFF));
  }
  for (char c : payload_text) out.push_back(static_cast<std::uint8_t>(c));
  return out;
}

}  // namespace

TEST_CASE("empty HELLO encodes to the documented sixteen bytes") {
  CmiMessage m;
  m.type = MsgType::HELLO;
  m.correlation_id = 0;
  m.payload = json::object();
  const std::vector<std::uint8_t> expected = {
      0x00, 0x00, 0x00, 0x0C, 0x01, 0x01, 0x00, 0x00,
      0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x7B, 0x7D};
  CHECK(encode_frame(m) == expected);
  CHECK(ref_frame(1, 0x01, 0, "{}") == expected);
}

TEST_CASE("encode matches the reference encoder on fixed messages") {
  {
    CmiMessage m;
    m.type = MsgType::FLOW_DEL;
    m.correlation_id = 0x0102030405060708ull;
    m.payload = {{"rule_id", 42}};
    CHECK(encode_frame(m) == ref_frame(1, 0x22, 0x0102030405060708ull,
                                       "{\"rule_id\":42}"));
  }
  {
    CmiMessage m;
    m.type = MsgType::UE_STEER;
    m.correlation_id = 7;
    // Insertion order differs from lexicographic order on purpose.
    m.payload = json::object();
    m.payload["target_ap"] = 2;
    m.payload["ue"] = 15;
    CHECK(encode_frame(m) == ref_frame(1, 0x40, 7, "{\"target_ap\":2,\"ue\":15}"));
  }
  {
    CmiMessage m;
    m.type = MsgType::ERROR;
    m.correlation_id = 9;
    m.payload = {{"detail", "no such rule"}, {"code", "UNKNOWN_RULE"}};
    CHECK(encode_frame(m) ==
          ref_frame(1, 0x7F, 9,
                    "{\"code\":\"UNKNOWN_RULE\",\"detail\":\"no such rule\"}"));
  }
}

TEST_CASE("canonical text is compact and key-ordered") {
  json j;
  j["zeta"] = 1;
  j["alpha"] = true;
  j["mid"] = "x";
  CHECK(canonical_json(j) == "{\"alpha\":true,\"mid\":\"x\",\"zeta\":1}");
  json j2;
  j2["mid"] = "x";
  j2["alpha"] = true;
  j2["zeta"] = 1;
  CHECK(canonical_json(j) == canonical_json(j2));
}

namespace {

struct GenField {
  const char* key;
  char kind;  // s,u,n,b,a,o
};

struct GenType {
  MsgType type;
  std::vector<GenField> fields;
};

const std::vector<GenType>& generator_tables() {
  static const std::vector<GenType> t = {
      {MsgType::HELLO, {{"controller_id", 's'}, {"proto_version", 'u'}}},
      {MsgType::HELLO_ACK, {{"wae_id", 'u'}, {"ap_count", 'u'}}},
      {MsgType::CONFIG_SET, {{"ap", 'u'}, {"channel", 'u'}, {"tx_power_dbm", 'n'}}},
      {MsgType::CONFIG_ACK,
       {{"ok", 'b'}, {"what", 's'}, {"flows", 'a'}, {"detail", 's'}}},
      {MsgType::CONFIG_GET, {{"what", 's'}, {"ap", 'u'}}},
      {MsgType::FLOW_ADD,
       {{"rule_id", 'u'},
        {"ue", 'u'},
        {"traffic_class", 's'},
        {"out", 's'},
        {"ap", 'u'},
        {"rate_mbps", 'n'},
        {"priority", 'u'},
        {"latency_budget_us", 'u'},
        {"slice_id", 's'}}},
      {MsgType::FLOW_MOD,
       {{"rule_id", 'u'},
        {"ue", 'u'},
        {"traffic_class", 's'},
        {"out", 's'},
        {"ap", 'u'},
        {"rate_mbps", 'n'},
        {"priority", 'u'},
        {"latency_budget_us", 'u'},
        {"slice_id", 's'}}},
      {MsgType::FLOW_DEL, {{"rule_id", 'u'}}},
      {MsgType::FLOW_ACK, {{"rule_id", 'u'}, {"ok", 'b'}, {"detail", 's'}}},
      {MsgType::STATS_REPORT, {{"time_us", 'u'}, {"aps", 'a'}, {"ue_rssi", 'a'}}},
      {MsgType::STATS_SUBSCRIBE, {{"period_us", 'u'}}},
      {MsgType::UE_STEER, {{"ue", 'u'}, {"target_ap", 'u'}}},
      {MsgType::CHANNEL_SET, {{"ap", 'u'}, {"channel", 'u'}}},
      {MsgType::MGMT_POLICY_SET,
       {{"ap", 'u'}, {"suppress_probe_above_load", 'u'}, {"deny_list", 'a'}}},
      {MsgType::SLICE_CREATE,
       {{"slice_id", 's'},
        {"weight", 'u'},
        {"rate_cap_mbps", 'n'},
        {"ues", 'a'},
        {"traffic_classes", 'a'}}},
      {MsgType::SLICE_READ, {{"slice_id", 's'}}},
      {MsgType::SLICE_UPDATE,
       {{"slice_id", 's'},
        {"weight", 'u'},
        {"rate_cap_mbps", 'n'},
        {"ues", 'a'},
        {"traffic_classes", 'a'}}},
      {MsgType::SLICE_DELETE, {{"slice_id", 's'}, {"force", 'b'}}},
      {MsgType::SLICE_ACK,
       {{"slice_id", 's'}, {"ok", 'b'}, {"detail", 's'}, {"slice", 'o'}}},
      {MsgType::SESSION_NOTIFY,
       {{"ue", 'u'},
        {"tunnel_id", 'u'},
        {"rate_mbps", 'n'},
        {"priority", 'u'},
        {"latency_budget_us", 'u'}}},
      {MsgType::ERROR, {{"code", 's'}, {"detail", 's'}}},
  };
  return t;
}

json random_value(Rng& rng, char kind) {
  switch (kind) {
    case 's': {
      static const char charset[] = "abcdefghij_0123456789";
      std::string s;
      std::size_t n = rng.uniform_int(12);
      for (std::size_t i = 0; i < n; ++i) {
        s.push_back(charset[rng.uniform_int(sizeof(charset) - 1)]);
      }
      return s;
    }
    case 'u': return rng.uniform_int(100000);
    case 'n': return static_cast<double>(rng.uniform_int(100000)) / 8.0;
    case 'b': return rng.uniform_int(2) == 1;
    case 'a': {
      json arr = json::array();
      std::size_t n = rng.uniform_int(4);
      for (std::size_t i = 0; i < n; ++i) arr.push_back(rng.uniform_int(64));
      return arr;
    }
    case 'o': {
      json obj = json::object();
      if (rng.uniform_int(2) == 1) obj["weight"] = rng.uniform_int(8);
      return obj;
    }
  }
  return nullptr;
}

CmiMessage random_message(Rng& rng) {
  const auto& tables = generator_tables();
  const GenType& gt = tables[rng.uniform_int(tables.size())];
  CmiMessage m;
  m.type = gt.type;
  m.correlation_id = rng.next();
  m.payload = json::object();
  for (const GenField& f : gt.fields) {
    if (rng.uniform_int(2) == 1) m.payload[f.key] = random_value(rng, f.kind);
  }
  return m;
}

}  // namespace

TEST_CASE("random messages survive an encode and decode round trip") {
  Rng rng(1001);
  for (int i = 0; i < 2000; ++i) {
    CmiMessage m = random_message(rng);
    auto bytes = encode_frame(m);
    DecodeResult r = decode_frame(bytes);
    REQUIRE(r.status == DecodeStatus::Message);
    CHECK(r.consumed == bytes.size());
    CHECK(r.message->version == m.version);
    CHECK(r.message->type == m.type);
    CHECK(r.message->correlation_id == m.correlation_id);
    CHECK(r.message->payload == m.payload);
  }
}

TEST_CASE("every strict prefix of a frame asks for more bytes") {
  CmiMessage m;
  m.type = MsgType::CHANNEL_SET;
  m.correlation_id = 3;
  m.payload = {{"ap", 1}, {"channel", 6}};
  auto bytes = encode_frame(m);
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    DecodeResult r = decode_frame(std::span(bytes.data(), cut));
    CHECK(r.status == DecodeStatus::NeedMoreBytes);
    CHECK(r.consumed == 0);
  }
}

TEST_CASE("unknown message type bytes are rejected but consumed") {
  for (std::uint8_t bad : {std::uint8_t{0x00}, std::uint8_t{0x03},
                           std::uint8_t{0x60}, std::uint8_t{0xEE}}) {
    auto bytes = ref_frame(1, bad, 5, "{}");
    DecodeResult r = decode_frame(bytes);
    CHECK(r.status == DecodeStatus::UnknownMsgType);
    CHECK(r.consumed == bytes.size());
  }
}

TEST_CASE("a foreign version byte is rejected but consumed") {
  auto bytes = ref_frame(2, 0x01, 0, "{}");
  DecodeResult r = decode_frame(bytes);
  CHECK(r.status == DecodeStatus::BadVersion);
  CHECK(r.consumed == bytes.size());
}

TEST_CASE("malformed bodies are rejected but consumed") {
  SUBCASE("body shorter than the fixed header") {
    std::vector<std::uint8_t> bytes = {0x00, 0x00, 0x00, 0x05,
                                       0x01, 0x01, 0x00, 0x00, 0x00};
    DecodeResult r = decode_frame(bytes);
    CHECK(r.status == DecodeStatus::MalformedPayload);
    CHECK(r.consumed == 9);
  }
  SUBCASE("payload is not valid JSON") {
    auto bytes = ref_frame(1, 0x01, 0, "{\"a\":");
    DecodeResult r = decode_frame(bytes);
    CHECK(r.status == DecodeStatus::MalformedPayload);
    CHECK(r.consumed == bytes.size());
  }
  SUBCASE("payload is valid JSON but not an object") {
    auto bytes = ref_frame(1, 0x01, 0, "[1,2]");
    DecodeResult r = decode_frame(bytes);
    CHECK(r.status == DecodeStatus::MalformedPayload);
  }
  SUBCASE("unknown payload field") {
    auto bytes = ref_frame(1, 0x01, 0, "{\"bogus\":1}");
    DecodeResult r = decode_frame(bytes);
    CHECK(r.status == DecodeStatus::MalformedPayload);
  }
  SUBCASE("known field with the wrong type") {
    auto bytes = ref_frame(1, 0x01, 0, "{\"proto_version\":\"one\"}");
    DecodeResult r = decode_frame(bytes);
    CHECK(r.status == DecodeStatus::MalformedPayload);
  }
  SUBCASE("negative value where an unsigned is required") {
    auto bytes = ref_frame(1, 0x22, 0, "{\"rule_id\":-3}");
    DecodeResult r = decode_frame(bytes);
    CHECK(r.status == DecodeStatus::MalformedPayload);
  }
}

TEST_CASE("encode rejects schema breaches") {
  CmiMessage m;
  m.type = MsgType::HELLO;
  m.payload = {{"bogus", 1}};
  CHECK_THROWS_AS(encode_frame(m), SchemaViolation);
  m.payload = {{"proto_version", "one"}};
  CHECK_THROWS_AS(encode_frame(m), SchemaViolation);
  m.payload = json::array();
  CHECK_THROWS_AS(encode_frame(m), SchemaViolation);
  m.payload = json::object();
  m.version = 2;
  CHECK_THROWS_AS(encode_frame(m), SchemaViolation);
}

TEST_CASE("the size cap is tight on both sides") {
  // Largest ERROR frame that still fits: body length equals the cap.
  // Canonical text {"code":"X","detail":"..."} carries 24 bytes around
  // the detail value, and the fixed body header another 10.
  std::size_t detail_len = kMaxFrameBytes - 10 - 24;
  CmiMessage m;
  m.type = MsgType::ERROR;
  m.correlation_id = 1;
  m.payload = {{"code", "X"}, {"detail", std::string(detail_len, 'a')}};
  auto bytes = encode_frame(m);
  CHECK(bytes.size() == 4ull + kMaxFrameBytes);
  DecodeResult ok = decode_frame(bytes);
  CHECK(ok.status == DecodeStatus::Message);

  m.payload["detail"] = std::string(detail_len + 1, 'a');
  CHECK_THROWS_AS(encode_frame(m), SchemaViolation);

  std::vector<std::uint8_t> oversized = {0x00, 0x10, 0x00, 0x01};  // cap + 1
  DecodeResult r = decode_frame(oversized);
  CHECK(r.status == DecodeStatus::FrameTooLarge);
  CHECK(r.consumed == 4);
}

TEST_CASE("stream decoder is split-point invariant") {
  Rng rng(2002);
  for (int round = 0; round < 30; ++round) {
    std::vector<CmiMessage> originals;
    std::vector<std::uint8_t> wire;
    std::size_t count = 1 + rng.uniform_int(20);
    for (std::size_t i = 0; i < count; ++i) {
      CmiMessage m = random_message(rng);
      auto f = encode_frame(m);
      wire.insert(wire.end(), f.begin(), f.end());
      originals.push_back(std::move(m));
    }

    StreamDecoder dec;
    std::vector<CmiMessage> seen;
    std::size_t pos = 0;
    while (pos < wire.size()) {
      std::size_t chunk = std::min<std::size_t>(1 + rng.uniform_int(37),
                                                wire.size() - pos);
      dec.feed(std::span(wire.data() + pos, chunk));
      pos += chunk;
      CHECK(dec.total_fed() == dec.total_consumed() + dec.buffered());
      while (auto r = dec.next()) {
        REQUIRE(r->status == DecodeStatus::Message);
        seen.push_back(std::move(*r->message));
      }
    }
    REQUIRE(seen.size() == originals.size());
    for (std::size_t i = 0; i < seen.size(); ++i) {
      CHECK(seen[i].type == originals[i].type);
      CHECK(seen[i].correlation_id == originals[i].correlation_id);
      CHECK(seen[i].payload == originals[i].payload);
    }
  }
}

TEST_CASE("stream decoder skips an oversized frame and recovers") {
  std::vector<std::uint8_t> wire;
  auto good = ref_frame(1, 0x01, 0, "{}");
  wire.insert(wire.end(), good.begin(), good.end());

  std::uint32_t huge = kMaxFrameBytes + 100;
  wire.push_back(static_cast<std::uint8_t>(huge >> 24));
  wire.push_back(static_cast<std::uint8_t>(huge >> 16));
  wire.push_back(static_cast<std::uint8_t>(huge >> 8));
  wire.push_back(static_cast<std::uint8_t>(huge));
  wire.insert(wire.end(), huge, 0x55);

  auto tail = ref_frame(1, 0x31, 12, "{\"period_us\":200000}");
  wire.insert(wire.end(), tail.begin(), tail.end());

  StreamDecoder dec;
  std::vector<DecodeStatus> events;
  std::vector<CmiMessage> msgs;
  std::size_t pos = 0;
  Rng rng(3003);
  while (pos < wire.size()) {
    std::size_t chunk =
        std::min<std::size_t>(1 + rng.uniform_int(70000), wire.size() - pos);
    dec.feed(std::span(wire.data() + pos, chunk));
    pos += chunk;
    CHECK(dec.total_fed() == dec.total_consumed() + dec.buffered());
    // Skipped bytes must not pile up in the buffer.
    CHECK(dec.buffered() <= 70001);
    while (auto r = dec.next()) {
      events.push_back(r->status);
      if (r->message) msgs.push_back(std::move(*r->message));
    }
  }
  REQUIRE(events.size() == 3);
  CHECK(events[0] == DecodeStatus::Message);
  CHECK(events[1] == DecodeStatus::FrameTooLarge);
  CHECK(events[2] == DecodeStatus::Message);
  REQUIRE(msgs.size() == 2);
  CHECK(msgs[1].type == MsgType::STATS_SUBSCRIBE);
  CHECK(msgs[1].correlation_id == 12);
  CHECK(dec.total_consumed() == wire.size());
  CHECK(dec.buffered() == 0);
}

TEST_CASE("stream decoder survives random garbage and mutations") {
  Rng rng(4004);
  StreamDecoder dec;
  for (int i = 0; i < 3000; ++i) {
    std::vector<std::uint8_t> chunk;
    if (rng.uniform_int(3) == 0) {
      // A valid frame with one byte flipped somewhere.
      CmiMessage m = random_message(rng);
      chunk = encode_frame(m);
      std::size_t at = rng.uniform_int(chunk.size());
      chunk[at] ^= static_cast<std::uint8_t>(1 + rng.uniform_int(255));
    } else {
      chunk.resize(rng.uniform_int(64));
      rng.fill(chunk.data(), chunk.size());
    }
    dec.feed(chunk);
    while (auto r = dec.next()) {
      (void)r;  // any status is acceptable; it must just never wedge
    }
    CHECK(dec.total_fed() == dec.total_consumed() + dec.buffered());
  }
}

TEST_CASE("message type names are distinct") {
  std::vector<std::uint8_t> codes = {0x01, 0x02, 0x10, 0x11, 0x12, 0x20, 0x21,
                                     0x22, 0x23, 0x30, 0x31, 0x40, 0x41, 0x42,
                                     0x50, 0x51, 0x52, 0x53, 0x54, 0x61, 0x7F};
  std::vector<std::string> names;
  for (std::uint8_t c : codes) {
    auto t = msg_type_from_byte(c);
    REQUIRE(t.has_value());
    names.push_back(to_string(*t));
  }
  std::sort(names.begin(), names.end());
  CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
}
