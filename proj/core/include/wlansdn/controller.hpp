// SPDX-License-Identifier: Apache-2.0
#ifndef WLANSDN_CONTROLLER_HPP
#define WLANSDN_CONTROLLER_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wlansdn/cmi_session.hpp"
#include "wlansdn/control_apps.hpp"
#include "wlansdn/data_plane.hpp"
#include "wlansdn/domain.hpp"

namespace wlansdn::ctrl {

using json = nlohmann::json;

struct NetworkView {
  std::map<std::uint32_t, apps::ApView> aps;
  std::map<std::uint32_t, apps::UeView> ues;
  std::map<std::string, dp::SliceDef> slices;
  std::int64_t last_report_us = 0;
};

enum class RuleState : std::uint8_t { Pending, Confirmed, Failed };

// Result of a northbound operation; empty optional means accepted.
struct OpError {
  std::string code;
  std::string detail;
};

// The control plane: keeps the network view current from agent reports,
// programs flows with an ack/retransmit discipline, runs the hosted
// decision apps, and owns slice templates end to end. All inputs arrive
// through one logical thread: bytes, timers, and northbound calls must
// never run concurrently.
class RanController {
 public:
  struct Config {
    std::string controller_id = "ctrl-0";
    std::uint32_t ap_count = 0;
    std::uint32_t ue_count = 0;
    std::int64_t stats_period_us = 200000;
    std::int64_t audit_period_us = 10000;
    std::int64_t retx_timeout_us = 50000;
    int max_attempts = 3;

    bool lb_enabled = false;
    bool admission_enabled = false;
    int admission_threshold = 8;
    bool ho_enabled = false;
    apps::HandoverPolicy ho_policy;
    bool channel_mgmt_enabled = false;
    std::int64_t channel_period_us = 1000000;
  };

  explicit RanController(Config cfg);

  void set_send(std::function<void(std::vector<std::uint8_t>&&)> fn) {
    send_ = std::move(fn);
  }
  void set_clock(std::function<std::int64_t()> fn) { clock_ = std::move(fn); }
  void set_timer(std::function<void(std::int64_t, std::function<void()>)> fn) {
    timer_ = std::move(fn);
  }

  // Emits the hello; timers arm once the agent answers.
  void start();
  void on_bytes(std::span<const std::uint8_t> bytes);

  // Northbound surface (scenario directives).
  std::optional<OpError> create_slice(const dp::SliceDef& def);
  std::optional<OpError> update_slice(const dp::SliceDef& def);
  std::optional<OpError> delete_slice(const std::string& id, bool force);
  std::optional<OpError> push_config(std::uint32_t ap, const json& config);
  std::optional<OpError> steer_ue(std::uint32_t ue, std::uint32_t target_ap);

  bool established() const { return session_.established(); }
  const NetworkView& view() const { return view_; }
  const dp::FlowTable& confirmed_flows() const { return confirmed_; }
  std::optional<std::uint64_t> tunnel_for(std::uint32_t ue,
                                          const std::string& tc) const;
  RuleState rule_state(std::uint64_t rule_id) const;

  const std::vector<std::int64_t>& rtt_samples_us() const { return rtt_us_; }

  struct Counters {
    std::uint64_t decode_errors = 0;
    std::uint64_t unknown_node_reports = 0;
    std::uint64_t flow_op_failures = 0;
    std::uint64_t failed_rules = 0;
    std::uint64_t retransmissions = 0;
    std::uint64_t audit_mismatches = 0;
    std::uint64_t audits_ok = 0;
    std::uint64_t steers_issued = 0;
    std::uint64_t lb_moves = 0;
    std::uint64_t cap_clamps = 0;
    std::uint64_t slice_op_failures = 0;
    std::uint64_t stray_acks = 0;
    std::uint64_t errors_received = 0;
  };
  const Counters& counters() const { return counters_; }

 private:
  enum class RuleOp : std::uint8_t { Add, Mod, Del };
  struct RuleRec {
    dp::FlowRule target;   // what the rule should look like after the op
    RuleState state = RuleState::Pending;
    RuleOp op = RuleOp::Add;
    json payload;          // last payload sent, for retransmission
    std::uint64_t corr = 0;
    int attempts = 0;
  };
  enum class SliceOpKind : std::uint8_t { Create, Update, Delete };
  struct PendingSlice {
    SliceOpKind kind;
    dp::SliceDef def;  // Delete carries only the id
  };

  std::int64_t now() const { return clock_ ? clock_() : 0; }
  void send_frame(std::vector<std::uint8_t>&& bytes);
  void send_msg(cmi::MsgType type, json payload, std::uint64_t corr);
  void on_established();
  void handle_msg(const cmi::CmiMessage& msg);
  void on_stats_report(const json& payload);
  void run_admission();
  void run_load_balancer();
  void run_handover(std::uint32_t ue);
  void run_channel_plan();
  void arm_audit_timer();
  void arm_channel_timer();
  void send_rule_op(std::uint64_t rule_id);
  void arm_rule_timer(std::uint64_t rule_id, std::uint64_t corr);
  void install_flow(std::uint32_t ue, std::uint64_t tunnel_id, QosProfile qos);
  std::optional<OpError> send_slice_op(SliceOpKind kind, const dp::SliceDef& def,
                                       bool force);

  Config cfg_;
  cmi::CmiSession session_;
  NetworkView view_;
  dp::FlowTable confirmed_;
  std::map<std::uint64_t, RuleRec> rules_;
  std::map<std::uint64_t, std::uint64_t> corr_to_rule_;
  std::map<std::uint64_t, PendingSlice> pending_slices_;       // by corr
  std::map<std::uint64_t, std::uint32_t> pending_configs_;     // corr -> ap
  std::map<std::uint64_t, std::pair<std::uint32_t, bool>> pending_policies_;
  std::map<std::uint64_t, std::int64_t> probes_;               // corr -> sent
  struct SteerInFlight {
    std::uint32_t target = 0;
    std::int64_t deadline_us = 0;
  };
  std::map<std::uint32_t, SteerInFlight> steering_;
  std::uint64_t next_rule_id_ = 1;
  std::vector<std::int64_t> rtt_us_;
  Counters counters_;

  std::function<void(std::vector<std::uint8_t>&&)> send_;
  std::function<std::int64_t()> clock_;
  std::function<void(std::int64_t, std::function<void()>)> timer_;
};

}  // namespace wlansdn::ctrl

#endif
