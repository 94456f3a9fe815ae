// SPDX-License-Identifier: Apache-2.0
#ifndef WLANSDN_WAE_HPP
#define WLANSDN_WAE_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wlansdn/cmi_session.hpp"
#include "wlansdn/data_plane.hpp"
#include "wlansdn/domain.hpp"
#include "wlansdn/sim.hpp"

namespace wlansdn::dp {

using json = nlohmann::json;

// Management frame vocabulary, kept in Packet::meta under "kind".
// Radio side: PROBE_REQ/PROBE_RESP, ASSOC_REQ/ASSOC_RESP, DISASSOC,
// DISASSOC_HINT (carries a steering target), SA_INIT/SA_OK.
// Backhaul side: ASSOC_IND/DISASSOC_IND, CONFIG/CONFIG_APPLIED, STEER,
// N2_SETUP.

inline constexpr std::size_t kMaxAssociated = 64;
inline constexpr std::size_t kHoBufferCap = 256;

// One radio head. Owns the association set and the local management
// policy; relays everything not addressed to it.
class AccessPoint {
 public:
  explicit AccessPoint(std::uint32_t index) : index_(index) {}

  void set_send_to_ue(std::function<void(std::uint32_t, sim::Packet&&)> fn) {
    send_to_ue_ = std::move(fn);
  }
  void set_send_to_wae(std::function<void(sim::Packet&&)> fn) {
    send_to_wae_ = std::move(fn);
  }
  void set_alloc_id(std::function<std::uint64_t()> fn) { alloc_id_ = std::move(fn); }

  void on_from_ue(sim::Packet&& p);
  void on_from_wae(sim::Packet&& p);

  std::uint32_t index() const { return index_; }
  int channel() const { return channel_; }
  double tx_power_dbm() const { return tx_power_dbm_; }
  std::size_t load() const { return associated_.size(); }
  const std::set<std::uint32_t>& associated() const { return associated_; }
  const MgmtPolicy& policy() const { return policy_; }

  std::uint64_t probes_suppressed = 0;
  std::uint64_t assoc_denied = 0;
  std::uint64_t not_associated_drops = 0;

 private:
  sim::Packet make_mgmt(NodeId dst, json meta) const;
  void handle_mgmt_from_ue(const json& meta);
  void handle_mgmt_from_wae(const json& meta);

  std::uint32_t index_;
  int channel_ = 1;
  double tx_power_dbm_ = 20.0;
  std::set<std::uint32_t> associated_;
  MgmtPolicy policy_;
  std::function<void(std::uint32_t, sim::Packet&&)> send_to_ue_;
  std::function<void(sim::Packet&&)> send_to_wae_;
  std::function<std::uint64_t()> alloc_id_;
};

enum class SliceOp : std::uint8_t { Create, Update, Delete };

// Access gateway: terminates the southbound control channel, owns the
// flow table and slice definitions, anchors terminal tunnels, relays
// registration traffic, and runs make-before-break steering.
class Wae {
 public:
  enum class Mode { Proposed, SplitMac };

  Wae(Mode mode, std::uint32_t wae_id, std::uint32_t ap_count);

  // Outbound wiring.
  void set_send_cmi(std::function<void(std::vector<std::uint8_t>&&)> fn) {
    send_cmi_ = std::move(fn);
  }
  void set_send_to_ap(std::function<void(std::uint32_t, sim::Packet&&)> fn) {
    send_to_ap_ = std::move(fn);
  }
  void set_send_n3(std::function<void(sim::Packet&&)> fn) { send_n3_ = std::move(fn); }
  void set_send_data_ctrl(std::function<void(sim::Packet&&)> fn) {
    send_data_ctrl_ = std::move(fn);
  }
  void set_send_nas_amf(std::function<void(sim::Packet&&)> fn) {
    send_nas_amf_ = std::move(fn);
  }
  void set_slice_apply(std::function<void(SliceOp, const SliceDef&)> fn) {
    slice_apply_ = std::move(fn);
  }
  void set_flow_rate_apply(
      std::function<void(std::uint32_t, const std::string&, double)> fn) {
    flow_rate_apply_ = std::move(fn);
  }
  void set_alloc_id(std::function<std::uint64_t()> fn) { alloc_id_ = std::move(fn); }
  void set_clock(std::function<std::int64_t()> fn) { clock_ = std::move(fn); }
  void set_timer(std::function<void(std::int64_t, std::function<void()>)> fn) {
    timer_ = std::move(fn);
  }
  // Builds the "aps" and "ue_rssi" sections of a stats report.
  void set_stats_collector(std::function<json()> fn) {
    stats_collector_ = std::move(fn);
  }

  // Inbound events.
  void on_cmi_bytes(std::span<const std::uint8_t> bytes);
  void on_from_ap(std::uint32_t ap, sim::Packet&& p);
  void on_n3(sim::Packet&& p);
  void on_data_from_ctrl(sim::Packet&& p);
  void on_from_amf(sim::Packet&& p);

  // State views.
  bool established() const { return session_.established(); }
  const FlowTable& flows() const { return flows_; }
  const std::map<std::string, SliceDef>& slices() const { return slices_; }
  std::optional<std::uint32_t> serving_ap(std::uint32_t ue) const;
  bool sa_established(std::uint32_t ue) const { return sa_up_.count(ue) > 0; }
  bool handover_pending(std::uint32_t ue) const { return ho_.count(ue) > 0; }
  std::int64_t stats_period_us() const { return stats_period_us_; }

  struct Counters {
    std::uint64_t uplink_unmatched = 0;
    std::uint64_t no_security_assoc = 0;
    std::uint64_t unknown_tunnel = 0;
    std::uint64_t nas_unroutable = 0;
    std::uint64_t downlink_unroutable = 0;
    std::uint64_t ho_buffer_drops = 0;
    std::uint64_t handovers = 0;
    std::uint64_t steer_ignored = 0;
    std::uint64_t ctrl_errors_seen = 0;
  };
  const Counters& counters() const { return counters_; }

 private:
  void handle_msg(const cmi::CmiMessage& msg);
  void send_frame(std::vector<std::uint8_t>&& bytes);
  void reply(cmi::MsgType type, json payload, std::uint64_t corr);
  void reply_error(std::uint64_t corr, const std::string& code,
                   const std::string& detail);
  void route_downlink(sim::Packet&& p);
  sim::Packet make_mgmt(NodeId dst, json meta) const;
  void emit_stats();
  void flow_ack(std::uint64_t corr, std::uint64_t rule_id, bool ok,
                const std::string& detail = "");

  struct HoState {
    std::uint32_t from_ap = 0;
    std::uint32_t to_ap = 0;
    std::deque<sim::Packet> buffer;
  };

  struct PendingSetup {
    std::uint64_t tunnel_id = 0;
    QosProfile qos;
  };

  Mode mode_;
  std::uint32_t wae_id_;
  std::uint32_t ap_count_;
  cmi::CmiSession session_;
  FlowTable flows_;
  std::map<std::string, SliceDef> slices_;
  std::map<std::uint32_t, std::uint32_t> serving_;
  std::set<std::uint32_t> sa_up_;
  std::map<std::uint32_t, PendingSetup> pending_setup_;
  std::map<std::uint32_t, HoState> ho_;
  std::map<std::uint64_t, std::uint32_t> pending_ap_ops_;
  std::int64_t stats_period_us_ = 0;
  std::uint64_t stats_gen_ = 0;
  Counters counters_;

  std::function<void(std::vector<std::uint8_t>&&)> send_cmi_;
  std::function<void(std::uint32_t, sim::Packet&&)> send_to_ap_;
  std::function<void(sim::Packet&&)> send_n3_;
  std::function<void(sim::Packet&&)> send_data_ctrl_;
  std::function<void(sim::Packet&&)> send_nas_amf_;
  std::function<void(SliceOp, const SliceDef&)> slice_apply_;
  std::function<void(std::uint32_t, const std::string&, double)> flow_rate_apply_;
  std::function<std::uint64_t()> alloc_id_;
  std::function<std::int64_t()> clock_;
  std::function<void(std::int64_t, std::function<void()>)> timer_;
  std::function<json()> stats_collector_;
};

}  // namespace wlansdn::dp

#endif  // WLANSDN_WAE_HPP
