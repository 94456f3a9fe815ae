// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cstdint>
#include <string>
#include <vector>

#include "wlansdn/runner.hpp"
#include "wlansdn/scenario.hpp"

using namespace wlansdn;
using run::Mode;
using scn::Scenario;
using json = nlohmann::json;

namespace {

// One AP at the origin, one stationary subscriber 10 m away, uplink CBR
// that stops well before the horizon so every queue drains.
Scenario base_scenario() {
  Scenario s;
  s.name = "unit";
  s.duration_us = 2000000;
  s.seed = 7;
  s.aps.push_back({sim::Vec2{0.0, 0.0}, 1, 20.0});
  scn::Subscriber sub;
  sub.key = {0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08,
             0x09, 0x0a, 0x0b, 0x0c, 0x0d, 0x0e, 0x0f, 0x10};
  sub.qos.rate_mbps = 100.0;
  s.subscribers.push_back(sub);
  scn::UeBehavior b;
  b.appear_us = 0;
  b.waypoints = {{0, sim::Vec2{10.0, 0.0}}};
  scn::TrafficSpec t;
  t.kind = scn::TrafficSpec::Kind::Cbr;
  t.rate_mbps = 2.0;
  t.packet_bytes = 1000;
  t.start_us = 200000;
  t.stop_us = 1500000;
  b.traffic.push_back(t);
  s.behaviors.push_back(b);
  return s;
}

const json* find_link(const json& report, const std::string& name) {
  for (const auto& l : report["links"])
    if (l["name"] == name) return &l;
  return nullptr;
}

std::uint64_t class_bytes(const json& link, const char* cls) {
  return link["classes"][cls]["bytes_delivered"].get<std::uint64_t>();
}

const json& first_flow(const json& report) {
  REQUIRE(!report["flows"].empty());
  return report["flows"][0];
}

}  // namespace

TEST_CASE("attach completes and uplink traffic reaches the core") {
  json r = run::run_scenario(base_scenario(), Mode::Proposed, 7);
  const json& sess = r["sessions"][0];
  CHECK(sess["session_active"] == true);
  CHECK(sess["sa_established"] == true);
  CHECK(sess["flow_add_msgs"].get<int>() >= 1);
  CHECK(sess["nas_rejects"] == 0);
  CHECK(!sess["tunnel_id"].is_null());
  CHECK(sess["serving_ap"] == 0);
  CHECK(sess["n3_wire_bytes"].get<std::uint64_t>() > 0);

  const json& f = first_flow(r);
  CHECK(f["direction"] == "uplink");
  CHECK(f["tx_packets"].get<int>() > 100);
  CHECK(f["rx_packets"] == f["tx_packets"]);
  CHECK(f["seq_gaps"] == 0);
  CHECK(f["seq_out_of_order"] == 0);
  CHECK(r["totals"]["data_drops"] == 0);
}

TEST_CASE("same seed gives byte-identical reports") {
  Scenario s = base_scenario();
  json a = run::run_scenario(s, Mode::Proposed, 99);
  json b = run::run_scenario(s, Mode::Proposed, 99);
  CHECK(a.dump() == b.dump());
  CHECK(a["digest"] == b["digest"]);

  json c = run::run_scenario(s, Mode::Proposed, 100);
  CHECK(c["digest"] != a["digest"]);
}

TEST_CASE("every link conserves packets once traffic has drained") {
  for (Mode mode : {Mode::Proposed, Mode::SplitMac}) {
    CAPTURE(run::to_string(mode));
    json r = run::run_scenario(base_scenario(), mode, 3);
    for (const auto& l : r["links"]) {
      CAPTURE(l["name"].get<std::string>());
      CHECK(l["backlog"] == 0);
      for (const auto& [cls, st] : l["classes"].items()) {
        CAPTURE(cls);
        CHECK(st["enqueued"].get<std::uint64_t>() ==
              st["delivered"].get<std::uint64_t>() +
                  st["dropped"].get<std::uint64_t>());
      }
    }
  }
}

TEST_CASE("control and user planes never share a wire when separated") {
  json r = run::run_scenario(base_scenario(), Mode::Proposed, 5);
  for (const char* name : {"cmi:ctrl-to-wae", "cmi:wae-to-ctrl"}) {
    const json* l = find_link(r, name);
    REQUIRE(l != nullptr);
    CHECK(class_bytes(*l, "CMI") > 0);
    CHECK(class_bytes(*l, "DATA") == 0);
    CHECK(class_bytes(*l, "N3") == 0);
  }
  for (const char* name : {"n3:wae-to-upf", "n3:upf-to-wae"}) {
    const json* l = find_link(r, name);
    REQUIRE(l != nullptr);
    CHECK(class_bytes(*l, "CMI") == 0);
  }
}

TEST_CASE("combined mode hauls data through the controller wire") {
  json r = run::run_scenario(base_scenario(), Mode::SplitMac, 5);
  const json* up = find_link(r, "shared:wae-to-ctrl");
  REQUIRE(up != nullptr);
  CHECK(class_bytes(*up, "CMI") > 0);
  CHECK(class_bytes(*up, "DATA") > 0);

  const json& sess = r["sessions"][0];
  CHECK(sess["session_active"] == true);
  CHECK(sess["n3_wire_bytes"].get<std::uint64_t>() > 0);
  const json& f = first_flow(r);
  CHECK(f["rx_packets"] == f["tx_packets"]);
  CHECK(f["seq_gaps"] == 0);
  CHECK(r["counters"]["runner.relay_unmatched"] == 0);
}

TEST_CASE("an empty world still runs to the horizon") {
  Scenario s;
  s.duration_us = 500000;
  s.aps.push_back({sim::Vec2{0.0, 0.0}, 1, 20.0});
  json r = run::run_scenario(s, Mode::Proposed, 1);
  CHECK(r["duration_us"] == 500000);
  CHECK(r["sessions"].empty());
  CHECK(r["flows"].empty());
  CHECK(r["totals"]["rx_payload_bytes"] == 0);
  CHECK(r["counters"]["engine.events_processed"].get<std::uint64_t>() > 0);
}

TEST_CASE("downlink traffic finds the terminal through the tunnel") {
  Scenario s = base_scenario();
  s.behaviors[0].traffic[0].downlink = true;
  json r = run::run_scenario(s, Mode::Proposed, 11);
  const json& f = first_flow(r);
  CHECK(f["direction"] == "downlink");
  CHECK(f["rx_packets"].get<int>() > 100);
  CHECK(f["rx_packets"] == f["tx_packets"]);
  CHECK(f["seq_gaps"] == 0);
  CHECK(r["totals"]["data_drops"] == 0);
}

TEST_CASE("a walk between two cells hands over without losing a packet") {
  Scenario s = base_scenario();
  s.name = "walk";
  s.duration_us = 30000000;
  s.aps.push_back({sim::Vec2{120.0, 0.0}, 6, 20.0});
  s.apps.handover = true;
  auto& b = s.behaviors[0];
  b.waypoints = {{0, sim::Vec2{10.0, 0.0}}, {25000000, sim::Vec2{110.0, 0.0}}};
  b.traffic[0].downlink = true;
  b.traffic[0].rate_mbps = 5.0;
  b.traffic[0].start_us = 500000;
  b.traffic[0].stop_us = 26000000;

  json r = run::run_scenario(s, Mode::Proposed, 21);
  CHECK(r["handover_count"] == 1);
  CHECK(r["sessions"][0]["serving_ap"] == 1);
  CHECK(r["sessions"][0]["tunnels_seen"].size() == 1);
  CHECK(r["association_churn"].get<int>() >= 1);
  const json& f = first_flow(r);
  CHECK(f["seq_gaps"] == 0);
  CHECK(f["seq_out_of_order"] == 0);
  CHECK(f["rx_packets"] == f["tx_packets"]);
  CHECK(r["totals"]["data_drops"] == 0);
  CHECK(r["counters"]["wae.ho_buffer_drops"] == 0);
}

TEST_CASE("a corrupted credential never turns into a session") {
  Scenario s = base_scenario();
  s.subscribers[0].corrupt_key = true;
  json r = run::run_scenario(s, Mode::Proposed, 13);
  const json& sess = r["sessions"][0];
  CHECK(sess["session_active"] == false);
  CHECK(sess["flow_add_msgs"] == 0);
  CHECK(sess["n3_wire_bytes"] == 0);
  CHECK(sess["nas_rejects"].get<int>() >= 1);
  CHECK(sess["tunnel_id"].is_null());
  const json* n3 = find_link(r, "n3:wae-to-upf");
  REQUIRE(n3 != nullptr);
  CHECK(class_bytes(*n3, "N3") == 0);
}

TEST_CASE("slice accounting fills buckets and force delete is honoured") {
  Scenario s = base_scenario();
  dp::SliceDef gold;
  gold.id = "gold";
  gold.weight = 2;
  gold.ues = {0};
  s.slices.push_back(gold);
  scn::Directive d;
  d.time_us = 1200000;
  d.op = "slice_delete";
  d.args = {{"slice_id", "gold"}, {"force", true}};
  s.directives.push_back(d);

  json r = run::run_scenario(s, Mode::Proposed, 17);
  CHECK(r["directive_failures"].empty());
  const auto& series = r["slice_buckets"]["series"];
  REQUIRE(series.contains("gold"));
  std::uint64_t gold_bytes = 0;
  for (const auto& v : series["gold"]) gold_bytes += v.get<std::uint64_t>();
  CHECK(gold_bytes > 0);
  // Force delete revokes the flows homed in the slice, so delivery stops
  // at the directive and later packets die unmatched at the gateway.
  CHECK(r["cmi_messages"]["SLICE_DELETE"] == 1);
  CHECK(r["cmi_messages"]["FLOW_DEL"].get<int>() >= 1);
  CHECK(first_flow(r)["last_rx_us"].get<std::int64_t>() < 1300000);
  CHECK(r["counters"]["wae.uplink_unmatched"].get<int>() > 0);
}

TEST_CASE("trace events arrive in causal order") {
  std::vector<json> events;
  run::RunOptions opts;
  opts.trace = [&](const json& e) { events.push_back(e); };
  (void)run::run_scenario(base_scenario(), Mode::Proposed, 7, opts);
  REQUIRE(!events.empty());
  std::int64_t last = -1;
  bool saw_assoc = false;
  bool saw_sa = false;
  for (const auto& e : events) {
    std::int64_t t = e["time_us"].get<std::int64_t>();
    CHECK(t >= last);
    last = t;
    if (e["event_kind"] == "assoc") saw_assoc = true;
    if (e["event_kind"] == "sa_up") saw_sa = true;
  }
  CHECK(saw_assoc);
  CHECK(saw_sa);
}

TEST_CASE("zero load multiplier silences traffic but not signalling") {
  run::RunOptions opts;
  opts.load_multiplier = 0.0;
  json r = run::run_scenario(base_scenario(), Mode::Proposed, 7, opts);
  CHECK(r["sessions"][0]["session_active"] == true);
  CHECK(r["totals"]["tx_packets"] == 0);
  CHECK(r["totals"]["rx_payload_bytes"] == 0);
}

TEST_CASE("mode names round trip") {
  CHECK(run::to_string(Mode::Proposed) == std::string("proposed"));
  CHECK(run::to_string(Mode::SplitMac) == std::string("splitmac"));
  CHECK(run::mode_from_string("proposed") == Mode::Proposed);
  CHECK(run::mode_from_string("splitmac") == Mode::SplitMac);
  CHECK(!run::mode_from_string("bogus").has_value());
}
