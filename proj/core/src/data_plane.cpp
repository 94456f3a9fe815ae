// SPDX-License-Identifier: Apache-2.0
#include "wlansdn/data_plane.hpp"

#include <algorithm>
#include <cmath>

namespace wlansdn::dp {

bool FlowTable::add(FlowRule rule) {
  auto key = std::make_pair(rule.ue, rule.traffic_class);
  if (by_key_.count(key) || by_id_.count(rule.rule_id)) return false;
  by_key_[key] = rule.rule_id;
  by_id_.emplace(rule.rule_id, std::move(rule));
  return true;
}

bool FlowTable::mod(std::uint64_t rule_id, const FlowRule& updated) {
  auto it = by_id_.find(rule_id);
  if (it == by_id_.end()) return false;
  auto old_key = std::make_pair(it->second.ue, it->second.traffic_class);
  auto new_key = std::make_pair(updated.ue, updated.traffic_class);
  if (new_key != old_key) {
    if (by_key_.count(new_key)) return false;  // would collide with another rule
    by_key_.erase(old_key);
    by_key_[new_key] = rule_id;
  }
  it->second = updated;
  it->second.rule_id = rule_id;
  return true;
}

bool FlowTable::del(std::uint64_t rule_id) {
  auto it = by_id_.find(rule_id);
  if (it == by_id_.end()) return false;
  by_key_.erase(std::make_pair(it->second.ue, it->second.traffic_class));
  by_id_.erase(it);
  return true;
}

const FlowRule* FlowTable::match(std::uint32_t ue,
                                 const std::string& traffic_class) const {
  auto it = by_key_.find(std::make_pair(ue, traffic_class));
  if (it == by_key_.end()) return nullptr;
  return &by_id_.at(it->second);
}

const FlowRule* FlowTable::by_id(std::uint64_t rule_id) const {
  auto it = by_id_.find(rule_id);
  return it == by_id_.end() ? nullptr : &it->second;
}

FlowRule* FlowTable::by_id_mut(std::uint64_t rule_id) {
  auto it = by_id_.find(rule_id);
  return it == by_id_.end() ? nullptr : &it->second;
}

bool slice_matches(const SliceDef& s, std::uint32_t ue, const std::string& tc) {
  if (!s.ues.empty() && !s.ues.count(ue)) return false;
  if (!s.traffic_classes.empty() && !s.traffic_classes.count(tc)) return false;
  return true;
}

bool slices_overlap(const SliceDef& a, const SliceDef& b) {
  bool ues_meet = a.ues.empty() || b.ues.empty() ||
                  std::any_of(a.ues.begin(), a.ues.end(),
                              [&](std::uint32_t u) { return b.ues.count(u) > 0; });
  bool tcs_meet = a.traffic_classes.empty() || b.traffic_classes.empty() ||
                  std::any_of(a.traffic_classes.begin(), a.traffic_classes.end(),
                              [&](const std::string& t) {
                                return b.traffic_classes.count(t) > 0;
                              });
  return ues_meet && tcs_meet;
}

std::string resolve_slice(const std::map<std::string, SliceDef>& slices,
                          std::uint32_t ue, const std::string& tc) {
  for (const auto& [id, def] : slices) {
    if (slice_matches(def, ue, tc)) return id;
  }
  return kDefaultSliceId;
}

void TokenBucket::refill(std::int64_t now_us) {
  if (now_us > last_us_) {
    tokens_ = std::min(depth_, tokens_ + rate_ * static_cast<double>(now_us - last_us_));
    last_us_ = now_us;
  }
}

bool TokenBucket::try_take(double bytes, std::int64_t now_us) {
  refill(now_us);
  double need = std::min(bytes, depth_);
  if (tokens_ + 1e-9 < need) return false;
  tokens_ -= need;
  return true;
}

std::int64_t TokenBucket::ready_at(double bytes, std::int64_t now_us) const {
  double need = std::min(bytes, depth_);
  double have = std::min(depth_, tokens_ + rate_ * 0.0);
  // Tokens as of now_us (const view of refill).
  if (now_us > last_us_) {
    have = std::min(depth_, tokens_ + rate_ * static_cast<double>(now_us - last_us_));
  }
  if (have + 1e-9 >= need) return now_us;
  if (rate_ <= 0) return now_us + 1000000;  // stalled; retry in a second
  double wait = (need - have) / rate_;
  return now_us + static_cast<std::int64_t>(std::ceil(wait));
}

SliceScheduler::SliceScheduler() {
  SliceDef def;
  def.id = kDefaultSliceId;
  def.weight = 1;
  slices_[def.id].def = def;
  cursor_ = kDefaultSliceId;
}

void SliceScheduler::apply_cap(SliceRt& s) {
  s.capped = s.def.rate_cap_mbps > 0;
  if (s.capped) {
    s.cap = TokenBucket(s.def.rate_cap_mbps * 1e6 / 8e6, kBucketDepthBytes);
  }
}

void SliceScheduler::upsert_slice(const SliceDef& def) {
  SliceRt& s = slices_[def.id];
  s.def = def;
  apply_cap(s);
}

std::vector<sim::Packet> SliceScheduler::purge_slice(const std::string& id) {
  std::vector<sim::Packet> out;
  if (id == kDefaultSliceId) return out;
  auto it = slices_.find(id);
  if (it == slices_.end()) return out;
  for (auto& p : it->second.q) out.push_back(std::move(p));
  slices_.erase(it);
  if (cursor_ == id) cursor_ = kDefaultSliceId;
  return out;
}

void SliceScheduler::set_flow_rate(std::uint32_t ue, const std::string& tc,
                                   double rate_mbps) {
  auto key = std::make_pair(ue, tc);
  if (rate_mbps <= 0) {
    flow_buckets_.erase(key);
  } else {
    flow_buckets_[key] = TokenBucket(rate_mbps * 1e6 / 8e6, kBucketDepthBytes);
  }
}

bool SliceScheduler::enqueue(sim::Packet&& p, std::int64_t) {
  std::string slice = classify_ ? classify_(p) : std::string(kDefaultSliceId);
  auto it = slices_.find(slice);
  if (it == slices_.end()) it = slices_.find(kDefaultSliceId);
  if (it->second.q.size() >= kSliceQueueCap) return false;
  it->second.q.push_back(std::move(p));
  return true;
}

SliceScheduler::Dequeued SliceScheduler::dequeue(std::int64_t now_us) {
  std::optional<std::int64_t> wake;
  if (slices_.empty()) return {};

  // Round-robin over the ordered slice map starting at the cursor.
  auto at = slices_.find(cursor_);
  if (at == slices_.end()) at = slices_.begin();

  // Enough rounds to build deficit for any packet the system can carry.
  std::size_t guard = 64 * slices_.size() + 64;
  for (std::size_t i = 0; i < guard; ++i) {
    SliceRt& s = at->second;
    auto advance = [&] {
      ++at;
      if (at == slices_.end()) at = slices_.begin();
      cursor_ = at->first;
    };

    if (s.q.empty()) {
      s.deficit = 0;
      s.credited = false;
      advance();
      continue;
    }

    sim::Packet& head = s.q.front();
    double metered = static_cast<double>(head.payload_bytes);

    // Both gates must open before the deficit is even consulted.
    auto fit = flow_buckets_.find(std::make_pair(head.ue, head.traffic_class));
    std::int64_t gate_at = now_us;
    if (s.capped) gate_at = std::max(gate_at, s.cap.ready_at(metered, now_us));
    if (fit != flow_buckets_.end()) {
      gate_at = std::max(gate_at, fit->second.ready_at(metered, now_us));
    }
    if (gate_at > now_us) {
      wake = wake ? std::min(*wake, gate_at) : gate_at;
      s.credited = false;
      advance();
      continue;
    }

    if (!s.credited) {
      s.deficit += kDrrQuantumBytes * s.def.weight;
      s.credited = true;
    }
    if (s.deficit < static_cast<double>(head.size_bytes)) {
      s.credited = false;
      advance();
      continue;
    }

    s.deficit -= static_cast<double>(head.size_bytes);
    if (s.capped) s.cap.try_take(metered, now_us);
    if (fit != flow_buckets_.end()) fit->second.try_take(metered, now_us);
    sim::Packet p = std::move(head);
    s.q.pop_front();
    if (s.q.empty()) {
      s.deficit = 0;
      s.credited = false;
    }
    cursor_ = at->first;
    return {.packet = std::move(p), .wake_us = std::nullopt};
  }
  return {.packet = std::nullopt, .wake_us = wake};
}

std::size_t SliceScheduler::backlog() const {
  std::size_t n = 0;
  for (const auto& [id, s] : slices_) n += s.q.size();
  return n;
}

std::size_t SliceScheduler::slice_backlog(const std::string& id) const {
  auto it = slices_.find(id);
  return it == slices_.end() ? 0 : it->second.q.size();
}

}  // namespace wlansdn::dp
