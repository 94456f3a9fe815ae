// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "wlansdn/data_plane.hpp"

#include <map>
#include <string>
#include <vector>

using namespace wlansdn;
using namespace wlansdn::dp;
using wlansdn::sim::Packet;

namespace {

FlowRule rule(std::uint64_t id, std::uint32_t ue, const std::string& tc,
              std::uint64_t tunnel = 0, std::uint32_t ap = 0) {
  FlowRule r;
  r.rule_id = id;
  r.ue = ue;
  r.traffic_class = tc;
  r.tunnel_id = tunnel;
  r.ap = ap;
  return r;
}

Packet data_packet(std::uint32_t ue, const std::string& tc,
                   std::uint32_t payload, std::uint64_t id = 0) {
  Packet p;
  p.id = id;
  p.cls = sim::PacketClass::N3;
  p.ue = ue;
  p.traffic_class = tc;
  p.payload_bytes = payload;
  p.size_bytes = payload + sim::kN3EncapBytes;
  return p;
}

}  // namespace

TEST_CASE("the flow table holds one rule per terminal and class") {
  FlowTable t;
  CHECK(t.add(rule(1, 5, "default", 100)));
  CHECK_FALSE(t.add(rule(2, 5, "default")));  // key collision
  CHECK_FALSE(t.add(rule(1, 6, "default")));  // id collision
  CHECK(t.add(rule(2, 5, "video", 101)));
  CHECK(t.size() == 2);

  REQUIRE(t.match(5, "default") != nullptr);
  CHECK(t.match(5, "default")->tunnel_id == 100);
  CHECK(t.match(5, "video")->tunnel_id == 101);
  // Default deny: no fallback matching whatsoever.
  CHECK(t.match(5, "voice") == nullptr);
  CHECK(t.match(6, "default") == nullptr);
}

TEST_CASE("modifying a rule can move its key unless it collides") {
  FlowTable t;
  CHECK(t.add(rule(1, 5, "default")));
  CHECK(t.add(rule(2, 5, "video")));

  FlowRule moved = *t.by_id(1);
  moved.traffic_class = "voice";
  CHECK(t.mod(1, moved));
  CHECK(t.match(5, "default") == nullptr);
  CHECK(t.match(5, "voice")->rule_id == 1);

  moved.traffic_class = "video";
  CHECK_FALSE(t.mod(1, moved));  // rule 2 owns that key
  CHECK(t.match(5, "voice")->rule_id == 1);

  CHECK_FALSE(t.mod(99, moved));
  CHECK(t.del(1));
  CHECK_FALSE(t.del(1));
  CHECK(t.match(5, "voice") == nullptr);
}

TEST_CASE("slice filters treat empty sets as wildcards") {
  SliceDef wild;
  wild.id = "wild";
  CHECK(slice_matches(wild, 1, "default"));
  CHECK(slice_matches(wild, 99, "video"));

  SliceDef ues_only;
  ues_only.id = "u";
  ues_only.ues = {1, 2};
  CHECK(slice_matches(ues_only, 1, "anything"));
  CHECK_FALSE(slice_matches(ues_only, 3, "anything"));

  SliceDef both;
  both.id = "b";
  both.ues = {1};
  both.traffic_classes = {"video"};
  CHECK(slice_matches(both, 1, "video"));
  CHECK_FALSE(slice_matches(both, 1, "default"));
  CHECK_FALSE(slice_matches(both, 2, "video"));
}

TEST_CASE("overlap detection is wildcard-aware") {
  SliceDef a;
  a.id = "a";
  a.ues = {1, 2};
  SliceDef b;
  b.id = "b";
  b.ues = {3, 4};
  CHECK_FALSE(slices_overlap(a, b));  // disjoint terminals

  b.ues = {2, 3};
  CHECK(slices_overlap(a, b));  // share terminal 2, both wildcard classes

  b.ues = {2};
  a.traffic_classes = {"video"};
  b.traffic_classes = {"voice"};
  CHECK_FALSE(slices_overlap(a, b));  // same terminal, different classes

  SliceDef wild;
  wild.id = "w";
  CHECK(slices_overlap(a, wild));  // a full wildcard overlaps everything
  CHECK(slices_overlap(wild, wild));
}

TEST_CASE("slice resolution picks the explicit match or falls back") {
  std::map<std::string, SliceDef> slices;
  SliceDef video;
  video.id = "video-slice";
  video.traffic_classes = {"video"};
  slices[video.id] = video;
  SliceDef vip;
  vip.id = "vip";
  vip.ues = {7};
  vip.traffic_classes = {"voice"};
  slices[vip.id] = vip;

  CHECK(resolve_slice(slices, 1, "video") == "video-slice");
  CHECK(resolve_slice(slices, 7, "voice") == "vip");
  CHECK(resolve_slice(slices, 7, "default") == kDefaultSliceId);
  CHECK(resolve_slice(slices, 1, "bulk") == kDefaultSliceId);
}

TEST_CASE("token buckets refill at their rate") {
  // 1 byte per microsecond, depth 3000.
  TokenBucket b(1.0, 3000.0);
  CHECK(b.try_take(3000, 0));
  CHECK_FALSE(b.try_take(1000, 0));
  CHECK(b.ready_at(1000, 0) == 1000);
  CHECK_FALSE(b.try_take(1000, 999));
  CHECK(b.try_take(1000, 1000));
  // Tokens cap at the depth.
  CHECK_FALSE(b.try_take(3000, 2000));
  CHECK(b.try_take(3000, 1000000));
  // Oversized requests are clamped to the depth, never blocked forever.
  TokenBucket c(1.0, 3000.0);
  CHECK(c.try_take(9999, 0));
}

TEST_CASE("the scheduler defaults everything to the default slice") {
  SliceScheduler s;
  CHECK(s.enqueue(data_packet(1, "default", 1000), 0));
  CHECK(s.backlog() == 1);
  auto d = s.dequeue(0);
  REQUIRE(d.packet.has_value());
  CHECK(s.backlog() == 0);
  CHECK_FALSE(s.dequeue(0).packet.has_value());
}

TEST_CASE("per-slice queues drop-tail at one hundred") {
  SliceScheduler s;
  for (int i = 0; i < 100; ++i) CHECK(s.enqueue(data_packet(1, "default", 100), 0));
  CHECK_FALSE(s.enqueue(data_packet(1, "default", 100), 0));
  CHECK(s.backlog() == 100);

  SliceDef extra;
  extra.id = "extra";
  extra.ues = {9};
  s.upsert_slice(extra);
  s.set_classifier([](const Packet& p) {
    return p.ue == 9 ? "extra" : "default";
  });
  CHECK(s.enqueue(data_packet(9, "default", 100), 0));  // separate queue
  CHECK(s.backlog() == 101);
  CHECK(s.slice_backlog("extra") == 1);
}

TEST_CASE("deficit round robin shares in weight proportion") {
  SliceScheduler s;
  SliceDef gold;
  gold.id = "gold";
  gold.weight = 2;
  gold.ues = {1};
  SliceDef silver;
  silver.id = "silver";
  silver.weight = 1;
  silver.ues = {2};
  s.upsert_slice(gold);
  s.upsert_slice(silver);
  s.set_classifier([](const Packet& p) {
    return p.ue == 1 ? "gold" : (p.ue == 2 ? "silver" : "default");
  });

  for (int i = 0; i < 90; ++i) {
    REQUIRE(s.enqueue(data_packet(1, "default", 1214), 0));
    REQUIRE(s.enqueue(data_packet(2, "default", 1214), 0));
  }
  // 1250-byte frames against quanta of 3000 and 1500 repeat every five
  // rounds: 12 gold and 6 silver per cycle. Two cycles is 36 services.
  int gold_served = 0, silver_served = 0;
  for (int i = 0; i < 36; ++i) {
    auto d = s.dequeue(0);
    REQUIRE(d.packet.has_value());
    if (d.packet->ue == 1) ++gold_served;
    else ++silver_served;
  }
  CHECK(gold_served == 24);
  CHECK(silver_served == 12);
}

TEST_CASE("an empty competitor forfeits its share") {
  SliceScheduler s;
  SliceDef gold;
  gold.id = "gold";
  gold.weight = 2;
  gold.ues = {1};
  s.upsert_slice(gold);
  s.set_classifier([](const Packet& p) {
    return p.ue == 1 ? "gold" : "default";
  });
  for (int i = 0; i < 10; ++i) REQUIRE(s.enqueue(data_packet(1, "default", 1214), 0));
  for (int i = 0; i < 10; ++i) {
    auto d = s.dequeue(0);
    REQUIRE(d.packet.has_value());
    CHECK(d.packet->ue == 1);
  }
}

TEST_CASE("flow metering withholds packets and names a wake time") {
  SliceScheduler s;
  // 8 Mbps flow: one byte per microsecond.
  s.set_flow_rate(1, "default", 8.0);
  for (int i = 0; i < 3; ++i) REQUIRE(s.enqueue(data_packet(1, "default", 3000), 0));

  auto d1 = s.dequeue(0);
  REQUIRE(d1.packet.has_value());  // bucket starts full
  auto d2 = s.dequeue(0);
  CHECK_FALSE(d2.packet.has_value());
  REQUIRE(d2.wake_us.has_value());
  CHECK(*d2.wake_us == 3000);
  auto d3 = s.dequeue(*d2.wake_us);
  CHECK(d3.packet.has_value());
}

TEST_CASE("slice caps bound a slice even when it is alone") {
  SliceScheduler s;
  SliceDef capped;
  capped.id = "capped";
  capped.ues = {1};
  capped.rate_cap_mbps = 24.0;  // 3 bytes per microsecond
  s.upsert_slice(capped);
  s.set_classifier([](const Packet& p) {
    return p.ue == 1 ? "capped" : "default";
  });
  REQUIRE(s.enqueue(data_packet(1, "default", 3000), 0));
  REQUIRE(s.enqueue(data_packet(1, "default", 3000), 0));
  CHECK(s.dequeue(0).packet.has_value());
  auto blocked = s.dequeue(0);
  CHECK_FALSE(blocked.packet.has_value());
  CHECK(blocked.wake_us == 1000);
}

TEST_CASE("purging a slice returns its backlog and the rest lives on") {
  SliceScheduler s;
  SliceDef doomed;
  doomed.id = "doomed";
  doomed.ues = {1};
  s.upsert_slice(doomed);
  s.set_classifier([](const Packet& p) {
    return p.ue == 1 ? "doomed" : "default";
  });
  for (int i = 0; i < 5; ++i) REQUIRE(s.enqueue(data_packet(1, "default", 100), 0));
  REQUIRE(s.enqueue(data_packet(2, "default", 100), 0));

  auto purged = s.purge_slice("doomed");
  CHECK(purged.size() == 5);
  CHECK_FALSE(s.has_slice("doomed"));
  CHECK(s.backlog() == 1);
  auto d = s.dequeue(0);
  REQUIRE(d.packet.has_value());
  CHECK(d.packet->ue == 2);

  // The default slice is not removable.
  CHECK(s.purge_slice("default").empty());
  CHECK(s.has_slice("default"));
}

TEST_CASE("a slice scheduler behind a link shapes flow throughput") {
  sim::Engine eng;
  auto sched = std::make_unique<SliceScheduler>();
  // 10 Mbps metering on the flow, link far faster.
  sched->set_flow_rate(1, "default", 10.0);
  sim::Link link(eng, "n3", 1000000000ull, 0, std::move(sched));
  std::uint64_t payload_delivered = 0;
  link.set_deliver([&](Packet&& p) { payload_delivered += p.payload_bytes; });

  // Offer 30 Mbps for one second.
  std::int64_t t = 0;
  std::uint64_t id = 1;
  while (t < 1000000) {
    eng.schedule_at(t, [&link, id] {
      Packet p = data_packet(1, "default", 1250);
      p.id = id;
      link.send(std::move(p));
    });
    t += 333;
    ++id;
  }
  eng.run_until(1000000);
  double mbps = static_cast<double>(payload_delivered) * 8.0 / 1e6;
  CHECK(mbps > 9.0);
  CHECK(mbps < 11.0);
}
