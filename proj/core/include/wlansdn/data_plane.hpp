// SPDX-License-Identifier: Apache-2.0
#ifndef WLANSDN_DATA_PLANE_HPP
#define WLANSDN_DATA_PLANE_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wlansdn/domain.hpp"
#include "wlansdn/sim.hpp"

namespace wlansdn::dp {

// One forwarding entry per terminal and traffic class. The entry binds
// both directions: uplink into tunnel_id, downlink out of radio ap.
struct FlowRule {
  std::uint64_t rule_id = 0;
  std::uint32_t ue = 0;
  std::string traffic_class = "default";
  std::uint64_t tunnel_id = 0;
  std::uint32_t ap = 0;
  QosProfile qos;
  std::string slice_id;  // empty: the implicit default slice

  bool operator==(const FlowRule&) const = default;
};

// Exact-match table keyed by (ue, traffic_class); default deny.
// At most one rule may exist per key, and rule ids are unique.
class FlowTable {
 public:
  bool add(FlowRule rule);
  bool mod(std::uint64_t rule_id, const FlowRule& updated);
  bool del(std::uint64_t rule_id);
  const FlowRule* match(std::uint32_t ue, const std::string& traffic_class) const;
  const FlowRule* by_id(std::uint64_t rule_id) const;
  FlowRule* by_id_mut(std::uint64_t rule_id);
  std::size_t size() const { return by_key_.size(); }
  const std::map<std::uint64_t, FlowRule>& rules() const { return by_id_; }

 private:
  std::map<std::uint64_t, FlowRule> by_id_;
  std::map<std::pair<std::uint32_t, std::string>, std::uint64_t> by_key_;
};

// Slice membership filter: empty sets match everything.
struct SliceDef {
  std::string id;
  std::uint32_t weight = 1;
  double rate_cap_mbps = 0;  // 0: uncapped
  std::set<std::uint32_t> ues;
  std::set<std::string> traffic_classes;

  bool operator==(const SliceDef&) const = default;
};

inline constexpr const char* kDefaultSliceId = "default";

bool slice_matches(const SliceDef& s, std::uint32_t ue, const std::string& tc);
// Two filters overlap when some (ue, tc) pair matches both.
bool slices_overlap(const SliceDef& a, const SliceDef& b);
// The unique explicit match, or the implicit default slice.
std::string resolve_slice(const std::map<std::string, SliceDef>& slices,
                          std::uint32_t ue, const std::string& tc);

class TokenBucket {
 public:
  TokenBucket() = default;
  TokenBucket(double rate_bytes_per_us, double depth_bytes)
      : rate_(rate_bytes_per_us), depth_(depth_bytes), tokens_(depth_bytes) {}

  bool try_take(double bytes, std::int64_t now_us);
  // Earliest instant at which try_take(bytes) would succeed.
  std::int64_t ready_at(double bytes, std::int64_t now_us) const;

 private:
  void refill(std::int64_t now_us);

  double rate_ = 0;
  double depth_ = 0;
  double tokens_ = 0;
  std::int64_t last_us_ = 0;
};

// Deficit round robin across slices with optional per-slice rate caps and
// per-flow token buckets. Quantum is weight * 1500 bytes; buckets meter
// application payload bytes with a two-packet depth.
class SliceScheduler : public sim::QueueDisc {
 public:
  SliceScheduler();

  bool enqueue(sim::Packet&& p, std::int64_t now_us) override;
  Dequeued dequeue(std::int64_t now_us) override;
  std::size_t backlog() const override;

  void set_classifier(std::function<std::string(const sim::Packet&)> fn) {
    classify_ = std::move(fn);
  }

  void upsert_slice(const SliceDef& def);
  bool has_slice(const std::string& id) const { return slices_.count(id) > 0; }
  // Removes the slice and returns whatever was queued under it.
  // The default slice cannot be removed.
  std::vector<sim::Packet> purge_slice(const std::string& id);

  // rate_mbps <= 0 removes metering for the flow.
  void set_flow_rate(std::uint32_t ue, const std::string& tc, double rate_mbps);

  std::size_t slice_backlog(const std::string& id) const;

 private:
  struct SliceRt {
    SliceDef def;
    std::deque<sim::Packet> q;
    double deficit = 0;
    // The quantum lands once per visit; while the cursor parks on a slice
    // between calls the flag keeps later calls from crediting it again.
    bool credited = false;
    bool capped = false;
    TokenBucket cap;
  };

  void apply_cap(SliceRt& s);

  std::map<std::string, SliceRt> slices_;
  std::map<std::pair<std::uint32_t, std::string>, TokenBucket> flow_buckets_;
  std::function<std::string(const sim::Packet&)> classify_;
  std::string cursor_;
};

inline constexpr std::size_t kSliceQueueCap = 100;
inline constexpr double kDrrQuantumBytes = 1500.0;
inline constexpr double kBucketDepthBytes = 3000.0;

}  // namespace wlansdn::dp

#endif  // WLANSDN_DATA_PLANE_HPP
