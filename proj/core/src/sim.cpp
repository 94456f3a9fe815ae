// SPDX-License-Identifier: Apache-2.0
#include "wlansdn/sim.hpp"

#include <algorithm>
#include <cmath>

namespace wlansdn::sim {

const char* to_string(PacketClass c) {
  switch (c) {
    case PacketClass::DATA: return "DATA";
    case PacketClass::CMI: return "CMI";
    case PacketClass::NAS: return "NAS";
    case PacketClass::MGMT: return "MGMT";
    case PacketClass::N3: return "N3";
  }
  return "?";
}

void Digest::mix(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h_ ^= (v >> (8 * i)) & 0xFF;
    h_ *= 0x100000001B3ull;
  }
}

void Digest::mix(std::string_view s) {
  for (char c : s) {
    h_ ^= static_cast<std::uint8_t>(c);
    h_ *= 0x100000001B3ull;
  }
}

void Digest::mix_bytes(std::span<const std::uint8_t> bytes) {
  for (std::uint8_t b : bytes) {
    h_ ^= b;
    h_ *= 0x100000001B3ull;
  }
}

void Engine::schedule_at(std::int64_t time_us, std::function<void()> fn) {
  if (time_us < now_us_) time_us = now_us_;
  events_.emplace(std::make_pair(time_us, next_seq_++), std::move(fn));
}

void Engine::schedule_in(std::int64_t delay_us, std::function<void()> fn) {
  schedule_at(now_us_ + std::max<std::int64_t>(delay_us, 0), std::move(fn));
}

void Engine::run_until(std::int64_t end_us) {
  while (!events_.empty()) {
    auto it = events_.begin();
    if (it->first.first > end_us) break;
    auto node = events_.extract(it);
    now_us_ = node.key().first;
    ++events_processed_;
    node.mapped()();
  }
  if (end_us > now_us_) now_us_ = end_us;
}

void Engine::run_all() {
  while (!events_.empty()) {
    auto node = events_.extract(events_.begin());
    now_us_ = node.key().first;
    ++events_processed_;
    node.mapped()();
  }
}

bool FifoDisc::enqueue(Packet&& p, std::int64_t) {
  if (q_.size() - head_ >= cap_) return false;
  q_.push_back(std::move(p));
  return true;
}

FifoDisc::Dequeued FifoDisc::dequeue(std::int64_t) {
  if (head_ == q_.size()) return {};
  Packet p = std::move(q_[head_]);
  ++head_;
  if (head_ > 64 && head_ * 2 > q_.size()) {
    q_.erase(q_.begin(), q_.begin() + static_cast<std::ptrdiff_t>(head_));
    head_ = 0;
  }
  return {.packet = std::move(p), .wake_us = std::nullopt};
}

Link::Link(Engine& eng, std::string name, std::uint64_t capacity_bps,
           std::int64_t prop_delay_us, std::unique_ptr<QueueDisc> qdisc)
    : eng_(eng),
      name_(std::move(name)),
      capacity_bps_(capacity_bps),
      prop_delay_us_(prop_delay_us),
      qdisc_(qdisc ? std::move(qdisc) : std::make_unique<FifoDisc>()) {
  Digest d;
  d.mix(name_);
  name_tag_ = d.value();
}

std::int64_t Link::serialize_us(std::uint32_t size_bytes) const {
  std::uint64_t bits = std::uint64_t{size_bytes} * 8;
  return static_cast<std::int64_t>((bits * 1000000ull + capacity_bps_ - 1) /
                                   capacity_bps_);
}

void Link::send(Packet&& p) {
  auto cls = static_cast<std::size_t>(p.cls);
  stats_[cls].enqueued += 1;
  eng_.digest().mix(name_tag_);
  eng_.digest().mix(1);
  eng_.digest().mix(p.id);
  eng_.digest().mix(p.size_bytes);
  eng_.digest().mix(static_cast<std::uint64_t>(eng_.now_us()));
  std::uint64_t pid = p.id;
  if (!qdisc_->enqueue(std::move(p), eng_.now_us())) {
    stats_[cls].dropped += 1;
    eng_.digest().mix(name_tag_);
    eng_.digest().mix(3);
    eng_.digest().mix(pid);
    return;
  }
  kick();
}

void Link::note_external_drop(const Packet& p) {
  stats_[static_cast<std::size_t>(p.cls)].dropped += 1;
  eng_.digest().mix(name_tag_);
  eng_.digest().mix(3);
  eng_.digest().mix(p.id);
}

void Link::kick() {
  if (busy_) return;
  auto d = qdisc_->dequeue(eng_.now_us());
  if (d.packet) {
    start_tx(std::move(*d.packet));
  } else if (d.wake_us && *d.wake_us > eng_.now_us()) {
    eng_.schedule_at(*d.wake_us, [this] { kick(); });
  }
}

void Link::start_tx(Packet&& p) {
  busy_ = true;
  std::int64_t ser = serialize_us(p.size_bytes);
  eng_.schedule_in(ser, [this, p = std::move(p)]() mutable {
    busy_ = false;
    auto cls = static_cast<std::size_t>(p.cls);
    eng_.schedule_in(prop_delay_us_, [this, cls, p = std::move(p)]() mutable {
      stats_[cls].delivered += 1;
      stats_[cls].bytes_delivered += p.size_bytes;
      eng_.digest().mix(name_tag_);
      eng_.digest().mix(2);
      eng_.digest().mix(p.id);
      eng_.digest().mix(static_cast<std::uint64_t>(eng_.now_us()));
      if (deliver_) deliver_(std::move(p));
    });
    kick();
  });
}

double rssi_dbm(double tx_power_dbm, double distance_m) {
  double d = std::max(distance_m, 1.0);
  return tx_power_dbm - (40.0 + 30.0 * std::log10(d));
}

double radio_range_m(double tx_power_dbm) {
  return std::pow(10.0, (tx_power_dbm - 40.0 - kAssocThresholdDbm) / 30.0);
}

double distance_m(Vec2 a, Vec2 b) {
  double dx = a.x - b.x;
  double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

WaypointPath::WaypointPath(std::vector<std::pair<std::int64_t, Vec2>> points)
    : points_(std::move(points)) {
  std::sort(points_.begin(), points_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
}

Vec2 WaypointPath::position(std::int64_t t_us) const {
  if (points_.empty()) return {};
  if (t_us <= points_.front().first) return points_.front().second;
  if (t_us >= points_.back().first) return points_.back().second;
  auto hi = std::upper_bound(
      points_.begin(), points_.end(), t_us,
      [](std::int64_t t, const auto& p) { return t < p.first; });
  auto lo = hi - 1;
  double span = static_cast<double>(hi->first - lo->first);
  double f = span > 0 ? static_cast<double>(t_us - lo->first) / span : 0.0;
  return {lo->second.x + f * (hi->second.x - lo->second.x),
          lo->second.y + f * (hi->second.y - lo->second.y)};
}

namespace {

std::int64_t ceil_div_u64(std::uint64_t num, std::uint64_t den) {
  return static_cast<std::int64_t>((num + den - 1) / den);
}

}  // namespace

CbrSource::CbrSource(std::int64_t start_us, std::int64_t stop_us,
                     std::uint64_t rate_bps, std::uint32_t packet_bytes)
    : start_us_(start_us),
      stop_us_(stop_us),
      rate_bps_(rate_bps),
      packet_bytes_(packet_bytes) {}

std::optional<std::int64_t> CbrSource::next() {
  ++k_;
  std::uint64_t bits = std::uint64_t{packet_bytes_} * 8;
  std::int64_t t = start_us_ + ceil_div_u64(k_ * bits * 1000000ull, rate_bps_);
  if (t > stop_us_) return std::nullopt;
  return t;
}

OnOffSource::OnOffSource(std::int64_t start_us, std::int64_t stop_us,
                         std::uint64_t rate_bps, std::uint32_t packet_bytes,
                         double mean_on_us, double mean_off_us, Rng rng)
    : start_us_(start_us),
      stop_us_(stop_us),
      rate_bps_(rate_bps),
      packet_bytes_(packet_bytes),
      mean_on_us_(mean_on_us),
      mean_off_us_(mean_off_us),
      rng_(rng) {
  win_start_us_ = start_us_;
  win_end_us_ = win_start_us_ +
                static_cast<std::int64_t>(rng_.exponential(mean_on_us_));
}

std::optional<std::int64_t> OnOffSource::next() {
  std::uint64_t bits = std::uint64_t{packet_bytes_} * 8;
  for (;;) {
    ++k_;
    std::int64_t t = start_us_ + ceil_div_u64(k_ * bits * 1000000ull, rate_bps_);
    if (t > stop_us_) return std::nullopt;
    while (t > win_end_us_) {
      win_start_us_ = win_end_us_ +
                      static_cast<std::int64_t>(rng_.exponential(mean_off_us_));
      win_end_us_ = win_start_us_ +
                    static_cast<std::int64_t>(rng_.exponential(mean_on_us_));
    }
    if (t >= win_start_us_) return t;
  }
}

}  // namespace wlansdn::sim
