// SPDX-License-Identifier: Apache-2.0
#ifndef WLANSDN_SIM_HPP
#define WLANSDN_SIM_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wlansdn/domain.hpp"
#include "wlansdn/rng.hpp"

namespace wlansdn::sim {

using json = nlohmann::json;

// Wire overheads, in bytes.
inline constexpr std::uint32_t kIpsecOverheadBytes = 64;  // UE <-> gateway tunnel
inline constexpr std::uint32_t kN3EncapBytes = 36;        // gateway <-> core tunnel
inline constexpr std::uint32_t kNasEnvelopeBytes = 40;    // control envelope + payload
inline constexpr std::uint32_t kMgmtFrameBytes = 50;      // probe/assoc/disassoc frames
inline constexpr std::size_t kDefaultQueueCap = 100;

enum class PacketClass : std::uint8_t { DATA, CMI, NAS, MGMT, N3 };
inline constexpr std::size_t kPacketClassCount = 5;

const char* to_string(PacketClass c);

struct Packet {
  std::uint64_t id = 0;
  PacketClass cls = PacketClass::DATA;
  NodeId src;
  NodeId dst;
  std::uint32_t size_bytes = 0;    // on-the-wire size including overheads
  std::int64_t created_us = 0;

  // DATA / N3 content.
  std::uint32_t ue = 0;
  std::string traffic_class;
  std::uint64_t seq = 0;
  std::uint32_t payload_bytes = 0;
  std::uint64_t tunnel_id = 0;
  bool downlink = false;

  // CMI frames and NAS envelopes carry opaque bytes.
  std::vector<std::uint8_t> bytes;

  // Management frames carry a small tagged record.
  json meta;
};

// Rolling FNV-1a over every event the simulation considers externally
// visible. Two runs agree iff their digests agree.
class Digest {
 public:
  void mix(std::uint64_t v);
  void mix(std::string_view s);
  void mix_bytes(std::span<const std::uint8_t> bytes);
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xCBF29CE484222325ull;
};

// Deterministic event loop over integer microseconds. Events at equal
// times run in scheduling order.
class Engine {
 public:
  std::int64_t now_us() const { return now_us_; }

  void schedule_at(std::int64_t time_us, std::function<void()> fn);
  void schedule_in(std::int64_t delay_us, std::function<void()> fn);

  // Runs every event with time <= end_us, then advances the clock to end_us.
  void run_until(std::int64_t end_us);
  // Runs until no events remain.
  void run_all();

  std::uint64_t events_processed() const { return events_processed_; }
  Digest& digest() { return digest_; }

 private:
  std::int64_t now_us_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t events_processed_ = 0;
  std::map<std::pair<std::int64_t, std::uint64_t>, std::function<void()>> events_;
  Digest digest_;
};

// Queueing policy behind a link. dequeue may withhold a packet and name a
// wake time instead, e.g. while a token bucket refills.
class QueueDisc {
 public:
  virtual ~QueueDisc() = default;
  // False when the packet was dropped instead of stored.
  virtual bool enqueue(Packet&& p, std::int64_t now_us) = 0;

  struct Dequeued {
    std::optional<Packet> packet;
    std::optional<std::int64_t> wake_us;
  };
  virtual Dequeued dequeue(std::int64_t now_us) = 0;
  virtual std::size_t backlog() const = 0;
};

class FifoDisc : public QueueDisc {
 public:
  explicit FifoDisc(std::size_t cap = kDefaultQueueCap) : cap_(cap) {}
  bool enqueue(Packet&& p, std::int64_t now_us) override;
  Dequeued dequeue(std::int64_t now_us) override;
  std::size_t backlog() const override { return q_.size() - head_; }

 private:
  std::size_t cap_;
  std::vector<Packet> q_;
  std::size_t head_ = 0;
};

struct ClassStats {
  std::uint64_t enqueued = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t bytes_delivered = 0;
};

// Point-to-point pipe: one serialization slot plus a queue, then a fixed
// propagation delay to the delivery callback.
class Link {
 public:
  Link(Engine& eng, std::string name, std::uint64_t capacity_bps,
       std::int64_t prop_delay_us,
       std::unique_ptr<QueueDisc> qdisc = nullptr);

  void set_deliver(std::function<void(Packet&&)> cb) { deliver_ = std::move(cb); }

  void send(Packet&& p);
  // Serialization time for one packet of this size on this link.
  std::int64_t serialize_us(std::uint32_t size_bytes) const;

  const std::string& name() const { return name_; }
  std::uint64_t capacity_bps() const { return capacity_bps_; }
  const ClassStats& stats(PacketClass c) const {
    return stats_[static_cast<std::size_t>(c)];
  }
  QueueDisc& qdisc() { return *qdisc_; }
  std::size_t backlog() const { return qdisc_->backlog(); }

  // Re-evaluates the queue; needed after out-of-band qdisc changes.
  void kick();

  // Books a packet that was pulled out of the qdisc without transmitting
  // (e.g. a slice purge) so enqueued == delivered + dropped still holds.
  void note_external_drop(const Packet& p);

 private:
  void start_tx(Packet&& p);

  Engine& eng_;
  std::string name_;
  std::uint64_t name_tag_;
  std::uint64_t capacity_bps_;
  std::int64_t prop_delay_us_;
  std::unique_ptr<QueueDisc> qdisc_;
  std::function<void(Packet&&)> deliver_;
  bool busy_ = false;
  std::array<ClassStats, kPacketClassCount> stats_{};
};

// Radio propagation: log-distance path loss, 40 dB at one meter and
// 30 dB per decade beyond it.
double rssi_dbm(double tx_power_dbm, double distance_m);
inline constexpr double kAssocThresholdDbm = -82.0;
// Distance at which the signal falls to the association threshold.
double radio_range_m(double tx_power_dbm);

struct Vec2 {
  double x = 0;
  double y = 0;
  bool operator==(const Vec2&) const = default;
};
double distance_m(Vec2 a, Vec2 b);

// Piecewise-linear movement through (time, position) waypoints.
class WaypointPath {
 public:
  WaypointPath() = default;
  explicit WaypointPath(std::vector<std::pair<std::int64_t, Vec2>> points);
  Vec2 position(std::int64_t t_us) const;

 private:
  std::vector<std::pair<std::int64_t, Vec2>> points_;
};

class TrafficSource {
 public:
  virtual ~TrafficSource() = default;
  // Arrival instants are produced in nondecreasing order; nullopt ends the flow.
  virtual std::optional<std::int64_t> next() = 0;
  virtual std::uint32_t packet_bytes() const = 0;
};

// Constant bit rate. Emits exactly floor(duration / interval) packets:
// arrival k lands at start + ceil(k * packet_bits * 1e6 / rate_bps).
class CbrSource : public TrafficSource {
 public:
  CbrSource(std::int64_t start_us, std::int64_t stop_us, std::uint64_t rate_bps,
            std::uint32_t packet_bytes);
  std::optional<std::int64_t> next() override;
  std::uint32_t packet_bytes() const override { return packet_bytes_; }

 private:
  std::int64_t start_us_;
  std::int64_t stop_us_;
  std::uint64_t rate_bps_;
  std::uint32_t packet_bytes_;
  std::uint64_t k_ = 0;
};

// Exponential on/off gate over a CBR stream; means are in microseconds.
class OnOffSource : public TrafficSource {
 public:
  OnOffSource(std::int64_t start_us, std::int64_t stop_us, std::uint64_t rate_bps,
              std::uint32_t packet_bytes, double mean_on_us, double mean_off_us,
              Rng rng);
  std::optional<std::int64_t> next() override;
  std::uint32_t packet_bytes() const override { return packet_bytes_; }

 private:
  std::int64_t start_us_;
  std::int64_t stop_us_;
  std::uint64_t rate_bps_;
  std::uint32_t packet_bytes_;
  double mean_on_us_;
  double mean_off_us_;
  Rng rng_;
  std::uint64_t k_ = 0;
  std::int64_t win_start_us_ = 0;
  std::int64_t win_end_us_ = 0;
};

}  // namespace wlansdn::sim

#endif  // WLANSDN_SIM_HPP
