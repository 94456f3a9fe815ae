// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "wlansdn/sim.hpp"

#include <cmath>
#include <vector>

using namespace wlansdn;
using namespace wlansdn::sim;

TEST_CASE("events run in time order, ties in scheduling order") {
  Engine eng;
  std::vector<int> order;
  eng.schedule_at(50, [&] { order.push_back(3); });
  eng.schedule_at(10, [&] { order.push_back(1); });
  eng.schedule_at(10, [&] { order.push_back(2); });
  eng.run_all();
  CHECK(order == std::vector<int>{1, 2, 3});
  CHECK(eng.now_us() == 50);
  CHECK(eng.events_processed() == 3);
}

TEST_CASE("run_until stops at the fence and advances the clock") {
  Engine eng;
  int fired = 0;
  eng.schedule_at(100, [&] { ++fired; });
  eng.schedule_at(200, [&] { ++fired; });
  eng.run_until(150);
  CHECK(fired == 1);
  CHECK(eng.now_us() == 150);
  eng.run_until(250);
  CHECK(fired == 2);
  CHECK(eng.now_us() == 250);
}

TEST_CASE("events scheduled into the past fire now, not before") {
  Engine eng;
  std::int64_t seen = -1;
  eng.schedule_at(100, [&] {
    eng.schedule_at(5, [&] { seen = eng.now_us(); });
  });
  eng.run_all();
  CHECK(seen == 100);
}

TEST_CASE("serialization plus propagation gives the delivery time") {
  Engine eng;
  // 1500 bytes at 100 Mbps serialize in 120 us; propagation adds 500 us.
  Link link(eng, "wan", 100000000ull, 500);
  CHECK(link.serialize_us(1500) == 120);

  std::vector<std::int64_t> deliveries;
  link.set_deliver([&](Packet&&) { deliveries.push_back(eng.now_us()); });

  Packet p;
  p.id = 1;
  p.size_bytes = 1500;
  link.send(std::move(p));
  eng.run_all();
  REQUIRE(deliveries.size() == 1);
  CHECK(deliveries[0] == 620);
}

TEST_CASE("serialization rounds up to whole microseconds") {
  Engine eng;
  Link link(eng, "slow", 3, 0);
  CHECK(link.serialize_us(1) == 2666667);
  Link fast(eng, "fast", 1000000000ull, 0);
  CHECK(fast.serialize_us(1) == 1);  // 8 ns rounds up
}

TEST_CASE("back-to-back packets pipeline on the serializer") {
  Engine eng;
  Link link(eng, "wan", 100000000ull, 500);
  std::vector<std::pair<std::uint64_t, std::int64_t>> deliveries;
  link.set_deliver([&](Packet&& p) { deliveries.push_back({p.id, eng.now_us()}); });
  for (std::uint64_t i = 1; i <= 3; ++i) {
    Packet p;
    p.id = i;
    p.size_bytes = 1500;
    link.send(std::move(p));
  }
  eng.run_all();
  REQUIRE(deliveries.size() == 3);
  CHECK(deliveries[0] == std::pair<std::uint64_t, std::int64_t>{1, 620});
  CHECK(deliveries[1] == std::pair<std::uint64_t, std::int64_t>{2, 740});
  CHECK(deliveries[2] == std::pair<std::uint64_t, std::int64_t>{3, 860});
}

TEST_CASE("the default queue holds one hundred packets and drops the rest") {
  Engine eng;
  Link link(eng, "wan", 100000000ull, 0);
  std::uint64_t delivered = 0;
  link.set_deliver([&](Packet&&) { ++delivered; });
  for (int i = 0; i < 105; ++i) {
    Packet p;
    p.id = static_cast<std::uint64_t>(i);
    p.cls = PacketClass::DATA;
    p.size_bytes = 1000;
    link.send(std::move(p));
  }
  // One packet on the wire plus a full queue; four had nowhere to go.
  CHECK(link.backlog() == 100);
  eng.run_all();
  const ClassStats& s = link.stats(PacketClass::DATA);
  CHECK(s.enqueued == 105);
  CHECK(s.dropped == 4);
  CHECK(s.delivered == 101);
  CHECK(delivered == 101);
  CHECK(s.enqueued == s.delivered + s.dropped);
  CHECK(s.bytes_delivered == 101000);
}

TEST_CASE("fifo order is preserved end to end") {
  Engine eng;
  Link link(eng, "wan", 10000000ull, 100);
  std::vector<std::uint64_t> ids;
  link.set_deliver([&](Packet&& p) { ids.push_back(p.id); });
  for (std::uint64_t i = 0; i < 50; ++i) {
    Packet p;
    p.id = i;
    p.size_bytes = 200 + static_cast<std::uint32_t>(i);
    link.send(std::move(p));
  }
  eng.run_all();
  REQUIRE(ids.size() == 50);
  for (std::uint64_t i = 0; i < 50; ++i) CHECK(ids[i] == i);
}

TEST_CASE("path loss fixes the signal at known distances") {
  CHECK(rssi_dbm(20.0, 1.0) == doctest::Approx(-20.0));
  CHECK(rssi_dbm(20.0, 10.0) == doctest::Approx(-50.0));
  CHECK(rssi_dbm(20.0, 100.0) == doctest::Approx(-80.0));
  // Closer than one meter clamps to the one-meter loss.
  CHECK(rssi_dbm(20.0, 0.25) == doctest::Approx(-20.0));
  CHECK(rssi_dbm(23.0, 10.0) == doctest::Approx(-47.0));
}

TEST_CASE("radio range inverts the path loss at the threshold") {
  double r = radio_range_m(20.0);
  CHECK(r == doctest::Approx(116.59144));
  CHECK(rssi_dbm(20.0, r) == doctest::Approx(kAssocThresholdDbm));
  CHECK(rssi_dbm(20.0, r + 0.1) < kAssocThresholdDbm);
}

TEST_CASE("waypoint paths interpolate and clamp") {
  WaypointPath path({{0, {0, 0}}, {1000000, {100, 0}}, {2000000, {100, 50}}});
  CHECK(path.position(-5).x == doctest::Approx(0));
  CHECK(path.position(500000).x == doctest::Approx(50));
  CHECK(path.position(500000).y == doctest::Approx(0));
  CHECK(path.position(1500000).x == doctest::Approx(100));
  CHECK(path.position(1500000).y == doctest::Approx(25));
  CHECK(path.position(9000000).y == doctest::Approx(50));
}

TEST_CASE("cbr emits exactly duration over interval packets") {
  // 10 Mbps with 1250-byte packets means one packet per millisecond.
  CbrSource src(0, 2000000, 10000000ull, 1250);
  std::vector<std::int64_t> times;
  while (auto t = src.next()) times.push_back(*t);
  REQUIRE(times.size() == 2000);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(times[i] == static_cast<std::int64_t>(1000 * (i + 1)));
  }
}

TEST_CASE("cbr handles non-integral intervals without drift") {
  // 1000-byte packets at 3 Mbps: interval 8000/3 us.
  CbrSource src(0, 1000000, 3000000ull, 1000);
  std::vector<std::int64_t> times;
  while (auto t = src.next()) times.push_back(*t);
  CHECK(times.size() == 375);  // floor(1e6 / (8000/3))
  CHECK(times.front() == 2667);
  CHECK(times.back() <= 1000000);
  for (std::size_t i = 1; i < times.size(); ++i) CHECK(times[i] > times[i - 1]);
  // No drift: the k-th arrival is within one microsecond of k * interval.
  for (std::size_t i = 0; i < times.size(); ++i) {
    double ideal = (i + 1) * 8000.0 / 3.0;
    CHECK(std::abs(times[i] - ideal) < 1.0);
  }
}

TEST_CASE("cbr respects a nonzero start") {
  CbrSource src(500000, 700000, 10000000ull, 1250);
  std::vector<std::int64_t> times;
  while (auto t = src.next()) times.push_back(*t);
  REQUIRE(times.size() == 200);
  CHECK(times.front() == 501000);
  CHECK(times.back() == 700000);
}

TEST_CASE("on off gating hits the duty cycle on average") {
  // Equal 50 ms means give a 0.5 duty cycle.
  OnOffSource src(0, 20000000, 10000000ull, 1250, 50000.0, 50000.0, Rng(5));
  std::size_t n = 0;
  std::int64_t last = -1;
  while (auto t = src.next()) {
    CHECK(*t > last);
    last = *t;
    ++n;
  }
  // 20000 slots at duty 0.5; generous band for the random window draw.
  CHECK(n > 8000);
  CHECK(n < 12000);
}

TEST_CASE("on off arrivals are reproducible for a seed") {
  OnOffSource a(0, 3000000, 10000000ull, 1250, 20000.0, 30000.0, Rng(9));
  OnOffSource b(0, 3000000, 10000000ull, 1250, 20000.0, 30000.0, Rng(9));
  for (;;) {
    auto ta = a.next();
    auto tb = b.next();
    CHECK(ta == tb);
    if (!ta) break;
  }
}

TEST_CASE("identical runs leave identical digests, reordered runs differ") {
  auto run = [](bool swapped) {
    Engine eng;
    Link link(eng, "wan", 10000000ull, 10);
    link.set_deliver([](Packet&&) {});
    Packet a, b;
    a.id = 1;
    a.size_bytes = 500;
    b.id = 2;
    b.size_bytes = 700;
    if (swapped) {
      link.send(std::move(b));
      link.send(std::move(a));
    } else {
      link.send(std::move(a));
      link.send(std::move(b));
    }
    eng.run_all();
    return eng.digest().value();
  };
  CHECK(run(false) == run(false));
  CHECK(run(true) == run(true));
  CHECK(run(false) != run(true));
}

TEST_CASE("digest mixing is order and content sensitive") {
  Digest a, b;
  a.mix(1);
  a.mix(2);
  b.mix(2);
  b.mix(1);
  CHECK(a.value() != b.value());
  Digest c, d;
  c.mix("link");
  d.mix("linl");
  CHECK(c.value() != d.value());
}
