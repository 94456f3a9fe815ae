// SPDX-License-Identifier: Apache-2.0
#include "wlansdn/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <tuple>
#include <vector>

#include "wlansdn/cmi.hpp"
#include "wlansdn/control_apps.hpp"
#include "wlansdn/controller.hpp"
#include "wlansdn/fivegc.hpp"
#include "wlansdn/wae.hpp"

namespace wlansdn::run {
namespace {

constexpr std::int64_t kMobilityTickUs = 100000;
constexpr std::int64_t kProbeWindowUs = 20000;
constexpr std::int64_t kAssocTimeoutUs = 50000;
constexpr std::int64_t kRescanBackoffUs = 100000;
constexpr std::int64_t kSliceBucketUs = 100000;
constexpr std::int64_t kBootstrapPollUs = 1000;
constexpr std::uint32_t kWaeId = 0;

// One terminal's radio and registration state. The terminal scans, ranks
// probe responses by measured signal plus any configured bias, associates,
// then runs the registration handshake once. A steer hint re-associates
// without touching registration.
struct UeState {
  std::uint32_t id = 0;
  fivegc::AuthKey key{};
  sim::WaypointPath path;
  sim::Vec2 pos{};
  bool appeared = false;

  enum class Assoc { Idle, Probing, Associating, Associated };
  Assoc assoc = Assoc::Idle;
  std::optional<std::uint32_t> serving;
  std::uint32_t pending_ap = 0;
  // Bumps on every scan or association attempt; stale timers compare it.
  std::uint64_t epoch = 0;
  std::map<std::uint32_t, double> heard;

  bool register_sent = false;
  bool registered = false;
  bool rejected = false;
};

struct FlowAccum {
  std::uint64_t tx_packets = 0;
  std::uint64_t rx_packets = 0;
  std::uint64_t tx_payload_bytes = 0;
  std::uint64_t rx_payload_bytes = 0;
  std::int64_t first_rx_us = -1;
  std::int64_t last_rx_us = -1;
  std::uint64_t rx_expected_seq = 0;
  std::uint64_t seq_gaps = 0;
  std::uint64_t seq_out_of_order = 0;
};

// (terminal, traffic class, downlink?) names one accounted flow.
using FlowKey = std::tuple<std::uint32_t, std::string, bool>;

struct TrafficFlow {
  std::uint32_t ue = 0;
  scn::TrafficSpec spec;
  std::unique_ptr<sim::TrafficSource> src;
};

class Simulation {
 public:
  Simulation(const scn::Scenario& s, Mode mode, std::uint64_t seed,
             const RunOptions& opts)
      : s_(s),
        mode_(mode),
        seed_(seed),
        opts_(opts),
        root_rng_(seed),
        wae_(mode == Mode::Proposed ? dp::Wae::Mode::Proposed
                                    : dp::Wae::Mode::SplitMac,
             kWaeId, static_cast<std::uint32_t>(s.aps.size())),
        ctl_(controller_cfg(s)),
        amf_(upf_, root_rng_.fork("amf-nonce")) {
    // The run digest identifies a configuration as much as an execution;
    // seeding it keeps runs with different seeds distinguishable even when
    // no code path consumes randomness.
    eng_.digest().mix(seed_);
    eng_.digest().mix(static_cast<std::uint64_t>(mode_));
    build_nodes();
    build_links();
    wire_nodes();
    seed_subscribers();
    schedule_world();
  }

  json run() {
    eng_.run_until(s_.duration_us);
    return build_report();
  }

 private:
  static ctrl::RanController::Config controller_cfg(const scn::Scenario& s) {
    ctrl::RanController::Config cfg;
    cfg.ap_count = static_cast<std::uint32_t>(s.aps.size());
    cfg.ue_count = static_cast<std::uint32_t>(s.subscribers.size());
    cfg.stats_period_us = s.stats_period_us;
    cfg.audit_period_us = s.audit_period_us;
    cfg.lb_enabled = s.apps.load_balancer;
    cfg.admission_enabled = s.apps.admission;
    cfg.admission_threshold = s.apps.admission_threshold;
    cfg.ho_enabled = s.apps.handover;
    cfg.ho_policy = s.apps.ho;
    cfg.channel_mgmt_enabled = s.apps.channel_mgmt;
    cfg.channel_period_us = s.apps.channel_period_us;
    return cfg;
  }

  std::uint64_t alloc_id() { return next_pkt_id_++; }

  sim::Packet mk(sim::PacketClass cls, NodeId src, NodeId dst,
                 std::uint32_t size) {
    sim::Packet p;
    p.id = alloc_id();
    p.cls = cls;
    p.src = src;
    p.dst = dst;
    p.size_bytes = size;
    return p;
  }

  sim::Link* make_link(const std::string& name, const scn::LinkSpec& spec,
                       std::unique_ptr<sim::QueueDisc> q = nullptr) {
    auto l = std::make_unique<sim::Link>(
        eng_, name, static_cast<std::uint64_t>(spec.capacity_mbps * 1e6),
        spec.delay_us, std::move(q));
    sim::Link* raw = l.get();
    owned_links_.push_back(std::move(l));
    all_links_.push_back(raw);
    return raw;
  }

  void trace(const char* kind, const std::string& node, json detail) {
    if (!opts_.trace) return;
    opts_.trace({{"time_us", eng_.now_us()},
                 {"node", node},
                 {"event_kind", kind},
                 {"detail", std::move(detail)}});
  }

  // ---- construction ----

  void build_nodes() {
    for (std::size_t i = 0; i < s_.aps.size(); ++i) {
      auto ap = std::make_unique<dp::AccessPoint>(
          static_cast<std::uint32_t>(i));
      // Initial radio settings arrive as a plain config command before any
      // callback is wired, so the applied-notice vanishes silently.
      sim::Packet cfg = mk(sim::PacketClass::MGMT, NodeId{NodeKind::WAE, 0},
                           NodeId{NodeKind::AP, static_cast<std::uint32_t>(i)},
                           sim::kMgmtFrameBytes);
      cfg.meta = {{"kind", "CONFIG"},
                  {"corr", 0},
                  {"channel", s_.aps[i].channel},
                  {"tx_power_dbm", s_.aps[i].tx_power_dbm}};
      ap->on_from_wae(std::move(cfg));
      aps_.push_back(std::move(ap));
    }

    ues_.resize(s_.subscribers.size());
    for (std::size_t i = 0; i < s_.subscribers.size(); ++i) {
      UeState& u = ues_[i];
      u.id = static_cast<std::uint32_t>(i);
      u.key = s_.subscribers[i].key;
      if (s_.subscribers[i].corrupt_key) u.key[0] ^= 0xff;
      u.path = sim::WaypointPath(s_.behaviors[i].waypoints);
    }
  }

  void build_links() {
    const auto wireless = scn::link_or_default(s_, "wireless");
    const auto backhaul = scn::link_or_default(s_, "backhaul");
    const auto cmi = scn::link_or_default(s_, "cmi");
    const auto n2 = scn::link_or_default(s_, "n2");
    const auto n3 = scn::link_or_default(s_, "n3");

    for (std::size_t i = 0; i < s_.aps.size(); ++i) {
      std::string tag = "AP:" + std::to_string(i);
      std::uint32_t ap = static_cast<std::uint32_t>(i);
      air_up_.push_back(make_link("air-up:" + tag, wireless));
      air_up_.back()->set_deliver(
          [this, ap](sim::Packet&& p) { aps_[ap]->on_from_ue(std::move(p)); });
      air_down_.push_back(make_link("air-down:" + tag, wireless));
      air_down_.back()->set_deliver(
          [this, ap](sim::Packet&& p) { ue_rx(ap, std::move(p)); });
      bh_up_.push_back(make_link("backhaul-up:" + tag, backhaul));
      bh_up_.back()->set_deliver([this, ap](sim::Packet&& p) {
        wae_.on_from_ap(ap, std::move(p));
      });
      bh_down_.push_back(make_link("backhaul-down:" + tag, backhaul));
      bh_down_.back()->set_deliver(
          [this, ap](sim::Packet&& p) { aps_[ap]->on_from_wae(std::move(p)); });
    }

    const bool proposed = mode_ == Mode::Proposed;
    const char* c2w = proposed ? "cmi:ctrl-to-wae" : "shared:ctrl-to-wae";
    const char* w2c = proposed ? "cmi:wae-to-ctrl" : "shared:wae-to-ctrl";
    ctrl_to_wae_ = make_link(c2w, cmi);
    ctrl_to_wae_->set_deliver([this](sim::Packet&& p) {
      if (p.cls == sim::PacketClass::CMI) {
        tap_cmi(p);
        wae_.on_cmi_bytes(p.bytes);
      } else {
        wae_.on_data_from_ctrl(std::move(p));
      }
    });
    wae_to_ctrl_ = make_link(w2c, cmi);
    wae_to_ctrl_->set_deliver([this](sim::Packet&& p) {
      if (p.cls == sim::PacketClass::CMI) {
        tap_cmi(p);
        ctl_.on_bytes(p.bytes);
      } else {
        relay_uplink(std::move(p));
      }
    });

    auto sched = std::make_unique<dp::SliceScheduler>();
    slice_sched_ = sched.get();
    slice_sched_->set_classifier([this](const sim::Packet& p) {
      return dp::resolve_slice(wae_.slices(), p.ue, p.traffic_class);
    });
    if (proposed) {
      n3_up_ = make_link("n3:wae-to-upf", n3, std::move(sched));
      n3_down_ = make_link("n3:upf-to-wae", n3);
      n3_down_->set_deliver(
          [this](sim::Packet&& p) { wae_.on_n3(std::move(p)); });
    } else {
      n3_up_ = make_link("n3:ctrl-to-upf", n3, std::move(sched));
      n3_down_ = make_link("n3:upf-to-ctrl", n3);
      n3_down_->set_deliver(
          [this](sim::Packet&& p) { relay_downlink(std::move(p)); });
    }
    n3_up_->set_deliver([this](sim::Packet&& p) { upf_rx(std::move(p)); });

    n2_up_ = make_link("n2:wae-to-amf", n2);
    n2_up_->set_deliver([this](sim::Packet&& p) { amf_rx(std::move(p)); });
    n2_down_ = make_link("n2:amf-to-wae", n2);
    n2_down_->set_deliver(
        [this](sim::Packet&& p) { wae_.on_from_amf(std::move(p)); });
  }

  void wire_nodes() {
    for (std::size_t i = 0; i < aps_.size(); ++i) {
      std::uint32_t ap = static_cast<std::uint32_t>(i);
      aps_[i]->set_alloc_id([this] { return alloc_id(); });
      aps_[i]->set_send_to_ue([this, ap](std::uint32_t, sim::Packet&& p) {
        air_down_[ap]->send(std::move(p));
      });
      aps_[i]->set_send_to_wae(
          [this, ap](sim::Packet&& p) { bh_up_[ap]->send(std::move(p)); });
    }

    wae_.set_alloc_id([this] { return alloc_id(); });
    wae_.set_clock([this] { return eng_.now_us(); });
    wae_.set_timer([this](std::int64_t delay, std::function<void()> cb) {
      eng_.schedule_in(delay, std::move(cb));
    });
    wae_.set_send_cmi([this](std::vector<std::uint8_t>&& bytes) {
      sim::Packet p = mk(sim::PacketClass::CMI, NodeId{NodeKind::WAE, kWaeId},
                         NodeId{NodeKind::CONTROLLER, 0},
                         static_cast<std::uint32_t>(bytes.size()));
      p.bytes = std::move(bytes);
      wae_to_ctrl_->send(std::move(p));
    });
    wae_.set_send_to_ap([this](std::uint32_t ap, sim::Packet&& p) {
      bh_down_[ap]->send(std::move(p));
    });
    wae_.set_send_n3(
        [this](sim::Packet&& p) { n3_up_->send(std::move(p)); });
    wae_.set_send_data_ctrl(
        [this](sim::Packet&& p) { wae_to_ctrl_->send(std::move(p)); });
    wae_.set_send_nas_amf(
        [this](sim::Packet&& p) { n2_up_->send(std::move(p)); });
    wae_.set_slice_apply([this](dp::SliceOp op, const dp::SliceDef& def) {
      if (op == dp::SliceOp::Delete) {
        for (const auto& p : slice_sched_->purge_slice(def.id))
          n3_up_->note_external_drop(p);
      } else {
        slice_sched_->upsert_slice(def);
      }
      n3_up_->kick();
    });
    wae_.set_flow_rate_apply(
        [this](std::uint32_t ue, const std::string& tc, double rate) {
          slice_sched_->set_flow_rate(ue, tc, rate);
          n3_up_->kick();
        });
    wae_.set_stats_collector([this] { return collect_stats(); });

    ctl_.set_clock([this] { return eng_.now_us(); });
    ctl_.set_timer([this](std::int64_t delay, std::function<void()> cb) {
      eng_.schedule_in(delay, std::move(cb));
    });
    ctl_.set_send([this](std::vector<std::uint8_t>&& bytes) {
      sim::Packet p = mk(sim::PacketClass::CMI, NodeId{NodeKind::CONTROLLER, 0},
                         NodeId{NodeKind::WAE, kWaeId},
                         static_cast<std::uint32_t>(bytes.size()));
      p.bytes = std::move(bytes);
      ctrl_to_wae_->send(std::move(p));
    });
  }

  void seed_subscribers() {
    for (std::size_t i = 0; i < s_.subscribers.size(); ++i)
      amf_.provision(static_cast<std::uint32_t>(i), s_.subscribers[i].key);
  }

  void schedule_world() {
    eng_.schedule_at(0, [this] { ctl_.start(); });
    eng_.schedule_at(kBootstrapPollUs, [this] { bootstrap(); });
    eng_.schedule_at(0, [this] { mobility_tick(); });
    eng_.schedule_at(0, [this] { conflict_sample(); });

    for (std::size_t i = 0; i < ues_.size(); ++i) {
      std::int64_t at = s_.behaviors[i].appear_us;
      if (at >= s_.duration_us) continue;
      eng_.schedule_at(at, [this, i] {
        UeState& u = ues_[i];
        u.appeared = true;
        u.pos = u.path.position(eng_.now_us());
        trace("appear", ue_name(u.id), {});
        start_scan(u);
      });
    }

    for (std::size_t i = 0; i < s_.behaviors.size(); ++i) {
      for (std::size_t j = 0; j < s_.behaviors[i].traffic.size(); ++j) {
        scn::TrafficSpec spec = s_.behaviors[i].traffic[j];
        spec.rate_mbps *= opts_.load_multiplier;
        if (spec.rate_mbps <= 0) continue;
        std::int64_t stop = spec.stop_us < 0 ? s_.duration_us : spec.stop_us;
        double bps = spec.rate_mbps * 1e6;
        TrafficFlow f;
        f.ue = static_cast<std::uint32_t>(i);
        f.spec = spec;
        if (spec.kind == scn::TrafficSpec::Kind::Cbr) {
          f.src = std::make_unique<sim::CbrSource>(spec.start_us, stop, bps,
                                                   spec.packet_bytes);
        } else {
          std::string label = "traffic/" + std::to_string(i) + "/" +
                              std::to_string(j);
          f.src = std::make_unique<sim::OnOffSource>(
              spec.start_us, stop, bps, spec.packet_bytes, spec.mean_on_us,
              spec.mean_off_us, root_rng_.fork(label));
        }
        tflows_.push_back(std::move(f));
      }
    }
    for (std::size_t fi = 0; fi < tflows_.size(); ++fi) pump_flow(fi);

    for (std::size_t i = 0; i < s_.directives.size(); ++i) {
      eng_.schedule_at(s_.directives[i].time_us,
                       [this, i] { apply_directive(s_.directives[i]); });
    }
  }

  // Initial slices go in once both ends of the control channel are up.
  void bootstrap() {
    if (!ctl_.established() || !wae_.established()) {
      eng_.schedule_in(kBootstrapPollUs, [this] { bootstrap(); });
      return;
    }
    for (const auto& def : s_.slices) {
      if (auto err = ctl_.create_slice(def)) {
        note_op_failure("initial_slice", *err);
      }
    }
  }

  // ---- radio model ----

  double rssi_at(const UeState& u, std::uint32_t ap) const {
    return sim::rssi_dbm(aps_[ap]->tx_power_dbm(),
                         sim::distance_m(u.pos, s_.aps[ap].pos));
  }

  bool reach(const UeState& u, std::uint32_t ap) const {
    return rssi_at(u, ap) >= sim::kAssocThresholdDbm;
  }

  double bias(std::uint32_t ap) const {
    auto it = s_.assoc_bias_db.find(ap);
    return it == s_.assoc_bias_db.end() ? 0.0 : it->second;
  }

  static std::string ue_name(std::uint32_t ue) {
    return NodeId{NodeKind::UE, ue}.str();
  }

  // ---- terminal behavior ----

  void ue_send_mgmt(UeState& u, std::uint32_t ap, NodeId dst, json meta) {
    if (!reach(u, ap)) {
      radio_fade_drops_ += 1;
      return;
    }
    sim::Packet p =
        mk(sim::PacketClass::MGMT, NodeId{NodeKind::UE, u.id}, dst,
           sim::kMgmtFrameBytes);
    p.ue = u.id;
    p.meta = std::move(meta);
    air_up_[ap]->send(std::move(p));
  }

  void start_scan(UeState& u) {
    u.assoc = UeState::Assoc::Probing;
    u.serving.reset();
    u.heard.clear();
    u.epoch += 1;
    trace("scan", ue_name(u.id), {});
    for (std::uint32_t ap = 0; ap < aps_.size(); ++ap) {
      if (!reach(u, ap)) continue;
      ue_send_mgmt(u, ap, NodeId{NodeKind::AP, ap},
                   {{"kind", "PROBE_REQ"}, {"ue", u.id}});
    }
    std::uint64_t ep = u.epoch;
    std::uint32_t id = u.id;
    eng_.schedule_in(kProbeWindowUs, [this, id, ep] { close_scan(id, ep); });
  }

  void close_scan(std::uint32_t id, std::uint64_t ep) {
    UeState& u = ues_[id];
    if (u.epoch != ep || u.assoc != UeState::Assoc::Probing) return;
    if (u.heard.empty()) {
      rescan_later(u);
      return;
    }
    // Strongest biased response wins; ties go to the lower radio index.
    std::uint32_t best = u.heard.begin()->first;
    double best_db = u.heard.begin()->second;
    for (const auto& [ap, db] : u.heard) {
      if (db > best_db) {
        best = ap;
        best_db = db;
      }
    }
    start_assoc(u, best);
  }

  void rescan_later(UeState& u) {
    u.assoc = UeState::Assoc::Idle;
    u.epoch += 1;
    std::uint64_t ep = u.epoch;
    std::uint32_t id = u.id;
    eng_.schedule_in(kRescanBackoffUs, [this, id, ep] {
      UeState& v = ues_[id];
      if (v.epoch == ep && v.assoc == UeState::Assoc::Idle) start_scan(v);
    });
  }

  void start_assoc(UeState& u, std::uint32_t ap) {
    u.assoc = UeState::Assoc::Associating;
    u.pending_ap = ap;
    u.serving.reset();
    u.epoch += 1;
    ue_send_mgmt(u, ap, NodeId{NodeKind::AP, ap},
                 {{"kind", "ASSOC_REQ"}, {"ue", u.id}});
    std::uint64_t ep = u.epoch;
    std::uint32_t id = u.id;
    eng_.schedule_in(kAssocTimeoutUs, [this, id, ep] {
      UeState& v = ues_[id];
      if (v.epoch == ep && v.assoc == UeState::Assoc::Associating)
        start_scan(v);
    });
  }

  void ue_rx(std::uint32_t ap, sim::Packet&& p) {
    if (p.dst.kind != NodeKind::UE || p.dst.index >= ues_.size()) return;
    UeState& u = ues_[p.dst.index];
    if (!reach(u, ap)) {
      radio_fade_drops_ += 1;
      return;
    }
    switch (p.cls) {
      case sim::PacketClass::MGMT:
        ue_rx_mgmt(u, ap, p.meta);
        return;
      case sim::PacketClass::NAS: {
        auto msg = fivegc::NasMsg::decode(p.bytes);
        if (msg) ue_rx_nas(u, ap, *msg);
        return;
      }
      case sim::PacketClass::DATA:
        account_rx(p, true);
        return;
      default:
        return;
    }
  }

  void ue_rx_mgmt(UeState& u, std::uint32_t ap, const json& meta) {
    const std::string kind = meta.value("kind", "");
    if (kind == "PROBE_RESP") {
      if (u.assoc != UeState::Assoc::Probing) return;
      std::uint32_t from = meta.value("ap", ap);
      u.heard[from] = rssi_at(u, from) + bias(from);
      return;
    }
    if (kind == "ASSOC_RESP") {
      std::uint32_t from = meta.value("ap", ap);
      if (u.assoc != UeState::Assoc::Associating || from != u.pending_ap)
        return;
      if (!meta.value("ok", false)) {
        trace("assoc_denied", ue_name(u.id), {{"ap", from}});
        rescan_later(u);
        return;
      }
      bool rejoin = !ever_associated_.insert(u.id).second;
      assoc_events_ += 1;
      u.assoc = UeState::Assoc::Associated;
      u.serving = from;
      trace(rejoin ? "reassoc" : "assoc", ue_name(u.id), {{"ap", from}});
      if (!u.register_sent && !u.rejected) {
        u.register_sent = true;
        ue_send_nas(u, fivegc::nas_register(u.id));
      }
      return;
    }
    if (kind == "DISASSOC_HINT") {
      std::uint32_t target = meta.value("target_ap", 0u);
      if (target < aps_.size()) start_assoc(u, target);
      return;
    }
    if (kind == "SA_INIT") {
      ue_send_mgmt(u, ap, NodeId{NodeKind::WAE, kWaeId},
                   {{"kind", "SA_OK"}, {"ue", u.id}});
      trace("sa_up", ue_name(u.id), {});
      return;
    }
  }

  void ue_send_nas(UeState& u, const fivegc::NasMsg& msg) {
    if (!u.serving) return;
    std::uint32_t ap = *u.serving;
    if (!reach(u, ap)) {
      radio_fade_drops_ += 1;
      return;
    }
    auto body = msg.encode();
    sim::Packet p = mk(sim::PacketClass::NAS, NodeId{NodeKind::UE, u.id},
                       NodeId{NodeKind::AMF, 0},
                       sim::kNasEnvelopeBytes +
                           static_cast<std::uint32_t>(body.size()));
    p.ue = u.id;
    p.bytes = std::move(body);
    air_up_[ap]->send(std::move(p));
  }

  void ue_rx_nas(UeState& u, std::uint32_t, const fivegc::NasMsg& msg) {
    switch (msg.tag) {
      case fivegc::NasTag::CHALLENGE: {
        auto nonce = fivegc::nonce_of(msg);
        if (!nonce) return;
        ue_send_nas(u, fivegc::nas_response(
                           u.id, fivegc::auth_response(u.key, *nonce)));
        return;
      }
      case fivegc::NasTag::ACCEPT:
        u.registered = true;
        trace("nas_accept", ue_name(u.id), {});
        return;
      case fivegc::NasTag::REJECT:
        u.rejected = true;
        trace("nas_reject", ue_name(u.id), {});
        return;
      default:
        return;
    }
  }

  // ---- core-side nodes ----

  void amf_rx(sim::Packet&& p) {
    if (p.cls != sim::PacketClass::NAS) return;
    auto msg = fivegc::NasMsg::decode(p.bytes);
    if (!msg) {
      nas_decode_fail_ += 1;
      return;
    }
    // Session QoS is provisioned per subscriber; the registration function
    // keeps one active profile, so set it just in time.
    if (msg->ue < s_.subscribers.size())
      amf_.set_session_qos(s_.subscribers[msg->ue].qos);
    auto res = amf_.on_nas(*msg);
    if (res.reply) {
      if (res.reply->tag == fivegc::NasTag::REJECT)
        nas_rejects_by_ue_[msg->ue] += 1;
      auto body = res.reply->encode();
      sim::Packet out = mk(sim::PacketClass::NAS, NodeId{NodeKind::AMF, 0},
                           NodeId{NodeKind::WAE, kWaeId},
                           sim::kNasEnvelopeBytes +
                               static_cast<std::uint32_t>(body.size()));
      out.ue = msg->ue;
      out.bytes = std::move(body);
      n2_down_->send(std::move(out));
    }
    if (res.setup) {
      sim::Packet out = mk(sim::PacketClass::MGMT, NodeId{NodeKind::AMF, 0},
                           NodeId{NodeKind::WAE, kWaeId},
                           sim::kMgmtFrameBytes);
      out.meta = {{"kind", "N2_SETUP"},
                  {"ue", res.setup->ue},
                  {"tunnel_id", res.setup->tunnel_id},
                  {"rate_mbps", res.setup->qos.rate_mbps},
                  {"priority", static_cast<std::uint32_t>(
                                   res.setup->qos.priority)},
                  {"latency_budget_us",
                   static_cast<std::uint64_t>(
                       res.setup->qos.latency_budget_us)}};
      n2_down_->send(std::move(out));
    }
  }

  void upf_rx(sim::Packet&& p) {
    auto sess = upf_.by_tunnel(p.tunnel_id);
    if (!sess || sess->ue != p.ue) {
      n3_unknown_tunnel_ += 1;
      return;
    }
    n3_bytes_by_ue_[p.ue] += p.size_bytes;
    tunnels_seen_[p.ue].insert(p.tunnel_id);
    account_rx(p, false);
    account_slice(p);
  }

  // Splitmac only: the controller node turns tunneled frames around
  // between the shared segment and the user-plane trunk.
  void relay_uplink(sim::Packet&& p) {
    if (p.cls != sim::PacketClass::DATA) return;
    auto tunnel = ctl_.tunnel_for(p.ue, p.traffic_class);
    if (!tunnel) {
      relay_unmatched_ += 1;
      return;
    }
    p.size_bytes = p.size_bytes - sim::kIpsecOverheadBytes + sim::kN3EncapBytes;
    p.cls = sim::PacketClass::N3;
    p.tunnel_id = *tunnel;
    p.src = NodeId{NodeKind::CONTROLLER, 0};
    p.dst = NodeId{NodeKind::UPF, 0};
    n3_up_->send(std::move(p));
  }

  void relay_downlink(sim::Packet&& p) {
    auto tunnel = ctl_.tunnel_for(p.ue, p.traffic_class);
    if (!tunnel || *tunnel != p.tunnel_id) {
      relay_unmatched_ += 1;
      return;
    }
    p.size_bytes = p.size_bytes - sim::kN3EncapBytes + sim::kIpsecOverheadBytes;
    p.cls = sim::PacketClass::DATA;
    p.downlink = true;
    p.src = NodeId{NodeKind::CONTROLLER, 0};
    p.dst = NodeId{NodeKind::WAE, kWaeId};
    ctrl_to_wae_->send(std::move(p));
  }

  // ---- traffic ----

  void pump_flow(std::size_t fi) {
    auto t = tflows_[fi].src->next();
    if (!t || *t >= s_.duration_us) return;
    eng_.schedule_at(*t, [this, fi] {
      fire_traffic(fi);
      pump_flow(fi);
    });
  }

  void fire_traffic(std::size_t fi) {
    TrafficFlow& f = tflows_[fi];
    const scn::TrafficSpec& spec = f.spec;
    FlowAccum& acc = flow_acc_[{f.ue, spec.traffic_class, spec.downlink}];
    if (!spec.downlink) {
      UeState& u = ues_[f.ue];
      if (u.assoc != UeState::Assoc::Associated || !u.serving) {
        tx_skip_unassociated_ += 1;
        return;
      }
      if (!reach(u, *u.serving)) {
        radio_fade_drops_ += 1;
        return;
      }
      sim::Packet p = mk(sim::PacketClass::DATA, NodeId{NodeKind::UE, f.ue},
                         NodeId{NodeKind::UPF, 0},
                         spec.packet_bytes + sim::kIpsecOverheadBytes);
      p.ue = f.ue;
      p.traffic_class = spec.traffic_class;
      p.seq = acc.tx_packets;
      p.payload_bytes = spec.packet_bytes;
      acc.tx_packets += 1;
      acc.tx_payload_bytes += spec.packet_bytes;
      air_up_[*u.serving]->send(std::move(p));
      return;
    }
    auto sess = upf_.by_ue(f.ue);
    if (!sess) {
      dl_skip_no_session_ += 1;
      return;
    }
    NodeId dst = mode_ == Mode::Proposed ? NodeId{NodeKind::WAE, kWaeId}
                                         : NodeId{NodeKind::CONTROLLER, 0};
    sim::Packet p = mk(sim::PacketClass::N3, NodeId{NodeKind::UPF, 0}, dst,
                       spec.packet_bytes + sim::kN3EncapBytes);
    p.ue = f.ue;
    p.traffic_class = spec.traffic_class;
    p.seq = acc.tx_packets;
    p.payload_bytes = spec.packet_bytes;
    p.tunnel_id = sess->tunnel_id;
    p.downlink = true;
    acc.tx_packets += 1;
    acc.tx_payload_bytes += spec.packet_bytes;
    tunnels_seen_[f.ue].insert(p.tunnel_id);
    n3_down_->send(std::move(p));
  }

  void account_rx(const sim::Packet& p, bool downlink) {
    FlowAccum& acc = flow_acc_[{p.ue, p.traffic_class, downlink}];
    acc.rx_packets += 1;
    acc.rx_payload_bytes += p.payload_bytes;
    if (acc.first_rx_us < 0) acc.first_rx_us = eng_.now_us();
    acc.last_rx_us = eng_.now_us();
    if (p.seq == acc.rx_expected_seq) {
      acc.rx_expected_seq += 1;
    } else if (p.seq > acc.rx_expected_seq) {
      acc.seq_gaps += p.seq - acc.rx_expected_seq;
      acc.rx_expected_seq = p.seq + 1;
    } else {
      acc.seq_out_of_order += 1;
    }
  }

  void account_slice(const sim::Packet& p) {
    std::string sid = dp::resolve_slice(wae_.slices(), p.ue, p.traffic_class);
    slice_bytes_[sid] += p.payload_bytes;
    auto& buckets = slice_buckets_[sid];
    std::size_t idx =
        static_cast<std::size_t>(eng_.now_us() / kSliceBucketUs);
    if (buckets.size() <= idx) buckets.resize(idx + 1, 0);
    buckets[idx] += static_cast<std::int64_t>(p.payload_bytes);
  }

  // ---- control-plane taps and directives ----

  void tap_cmi(const sim::Packet& p) {
    auto res = cmi::decode_frame(p.bytes);
    if (res.status != cmi::DecodeStatus::Message || !res.message) return;
    cmi_counts_[cmi::to_string(res.message->type)] += 1;
    if (res.message->type == cmi::MsgType::FLOW_ADD)
      flow_add_by_ue_[res.message->payload.value("ue", 0u)] += 1;
  }

  void note_op_failure(const std::string& op, const ctrl::OpError& err) {
    op_failures_.push_back({{"time_us", eng_.now_us()},
                            {"op", op},
                            {"code", err.code},
                            {"detail", err.detail}});
    trace("directive_failed", "CONTROLLER:0",
          {{"op", op}, {"code", err.code}});
  }

  void apply_directive(const scn::Directive& d) {
    std::optional<ctrl::OpError> err;
    if (d.op == "slice_create") {
      err = ctl_.create_slice(scn::slice_from_json(d.args.at("slice")));
    } else if (d.op == "slice_update") {
      err = ctl_.update_slice(scn::slice_from_json(d.args.at("slice")));
    } else if (d.op == "slice_delete") {
      err = ctl_.delete_slice(d.args.at("slice_id").get<std::string>(),
                              d.args.value("force", false));
    } else if (d.op == "push_config") {
      err = ctl_.push_config(d.args.at("ap").get<std::uint32_t>(),
                             d.args.at("config"));
    } else if (d.op == "steer_ue") {
      err = ctl_.steer_ue(d.args.at("ue").get<std::uint32_t>(),
                          d.args.at("target_ap").get<std::uint32_t>());
    }
    trace("directive", "CONTROLLER:0", {{"op", d.op}});
    if (err) note_op_failure(d.op, *err);
  }

  // ---- periodic world upkeep ----

  void mobility_tick() {
    for (auto& u : ues_) {
      if (u.appeared) u.pos = u.path.position(eng_.now_us());
    }
    if (eng_.now_us() + kMobilityTickUs < s_.duration_us)
      eng_.schedule_in(kMobilityTickUs, [this] { mobility_tick(); });
  }

  apps::ConflictGraph current_graph() const {
    std::vector<apps::ApSite> sites;
    for (std::size_t i = 0; i < aps_.size(); ++i) {
      sites.push_back({static_cast<std::uint32_t>(i), s_.aps[i].pos,
                       aps_[i]->tx_power_dbm()});
    }
    return apps::build_conflict_graph(sites);
  }

  void conflict_sample() {
    auto g = current_graph();
    std::map<std::uint32_t, int> assignment;
    for (std::size_t i = 0; i < aps_.size(); ++i)
      assignment[static_cast<std::uint32_t>(i)] = aps_[i]->channel();
    conflict_series_.push_back({{"time_us", eng_.now_us()},
                                {"count", apps::conflict_count(g, assignment)}});
    if (eng_.now_us() + s_.stats_period_us < s_.duration_us)
      eng_.schedule_in(s_.stats_period_us, [this] { conflict_sample(); });
  }

  json collect_stats() {
    auto g = current_graph();
    json aps = json::array();
    for (std::size_t i = 0; i < aps_.size(); ++i) {
      std::uint32_t idx = static_cast<std::uint32_t>(i);
      json neighbors = json::array();
      for (const auto& [a, b] : g.edges) {
        if (a == idx) neighbors.push_back(b);
        if (b == idx) neighbors.push_back(a);
      }
      aps.push_back({{"ap", idx},
                     {"channel", aps_[i]->channel()},
                     {"load", aps_[i]->load()},
                     {"neighbors", std::move(neighbors)}});
    }
    json ue_rssi = json::array();
    for (const auto& u : ues_) {
      if (!u.appeared) continue;
      json rssi = json::object();
      for (std::uint32_t ap = 0; ap < aps_.size(); ++ap)
        rssi[std::to_string(ap)] = rssi_at(u, ap);
      json e = {{"ue", u.id}, {"rssi", std::move(rssi)}};
      if (auto serving = wae_.serving_ap(u.id)) e["serving"] = *serving;
      ue_rssi.push_back(std::move(e));
    }
    return {{"aps", std::move(aps)}, {"ue_rssi", std::move(ue_rssi)}};
  }

  // ---- report ----

  static json percentile_block(std::vector<std::int64_t> v) {
    json r;
    r["samples"] = v.size();
    if (v.empty()) {
      r["mean"] = 0.0;
      r["p50"] = 0;
      r["p95"] = 0;
      r["p99"] = 0;
      return r;
    }
    std::sort(v.begin(), v.end());
    double sum = std::accumulate(v.begin(), v.end(), 0.0);
    r["mean"] = sum / static_cast<double>(v.size());
    auto rank = [&](double q) {
      std::size_t k = static_cast<std::size_t>(
          std::ceil(q * static_cast<double>(v.size())));
      if (k == 0) k = 1;
      return v[k - 1];
    };
    r["p50"] = rank(0.50);
    r["p95"] = rank(0.95);
    r["p99"] = rank(0.99);
    return r;
  }

  json build_report() {
    json r;
    r["schema"] = kReportSchema;
    r["name"] = s_.name;
    r["mode"] = to_string(mode_);
    r["seed"] = seed_;
    r["duration_us"] = s_.duration_us;
    char hexbuf[32];
    std::snprintf(hexbuf, sizeof(hexbuf), "%016llx",
                  static_cast<unsigned long long>(eng_.digest().value()));
    r["digest"] = hexbuf;

    r["control_rtt_us"] = percentile_block(ctl_.rtt_samples_us());

    json flows = json::array();
    std::uint64_t total_rx_payload = 0;
    std::uint64_t total_tx_packets = 0;
    std::uint64_t total_rx_packets = 0;
    for (const auto& [key, acc] : flow_acc_) {
      const auto& [ue, tc, downlink] = key;
      double mbps = static_cast<double>(acc.rx_payload_bytes) * 8.0 /
                    static_cast<double>(s_.duration_us);
      flows.push_back({{"ue", ue},
                       {"traffic_class", tc},
                       {"direction", downlink ? "downlink" : "uplink"},
                       {"tx_packets", acc.tx_packets},
                       {"rx_packets", acc.rx_packets},
                       {"tx_payload_bytes", acc.tx_payload_bytes},
                       {"rx_payload_bytes", acc.rx_payload_bytes},
                       {"throughput_mbps", mbps},
                       {"seq_gaps", acc.seq_gaps},
                       {"seq_out_of_order", acc.seq_out_of_order},
                       {"first_rx_us", acc.first_rx_us},
                       {"last_rx_us", acc.last_rx_us}});
      total_rx_payload += acc.rx_payload_bytes;
      total_tx_packets += acc.tx_packets;
      total_rx_packets += acc.rx_packets;
    }
    r["flows"] = std::move(flows);

    json slices = json::array();
    for (const auto& [id, bytes] : slice_bytes_) {
      slices.push_back({{"id", id},
                        {"rx_payload_bytes", bytes},
                        {"throughput_mbps",
                         static_cast<double>(bytes) * 8.0 /
                             static_cast<double>(s_.duration_us)}});
    }
    r["slices"] = std::move(slices);
    json buckets = json::object();
    for (const auto& [id, series] : slice_buckets_) buckets[id] = series;
    r["slice_buckets"] = {{"bucket_us", kSliceBucketUs},
                          {"series", std::move(buckets)}};

    r["handover_count"] = wae_.counters().handovers;
    r["association_total"] = assoc_events_;
    r["association_churn"] = assoc_events_ - ever_associated_.size();

    json ap_state = json::array();
    for (std::size_t i = 0; i < aps_.size(); ++i) {
      ap_state.push_back({{"ap", i},
                          {"channel", aps_[i]->channel()},
                          {"tx_power_dbm", aps_[i]->tx_power_dbm()},
                          {"load", aps_[i]->load()}});
    }
    r["aps"] = std::move(ap_state);

    json sessions = json::array();
    for (const auto& u : ues_) {
      bool active = amf_.state(u.id) == fivegc::AmfUeState::REGISTERED &&
                    wae_.sa_established(u.id);
      json e = {{"ue", u.id},
                {"session_active", active},
                {"sa_established", wae_.sa_established(u.id)},
                {"flow_add_msgs", map_get(flow_add_by_ue_, u.id)},
                {"nas_rejects", map_get(nas_rejects_by_ue_, u.id)},
                {"n3_wire_bytes", map_get(n3_bytes_by_ue_, u.id)}};
      if (auto serving = wae_.serving_ap(u.id)) {
        e["serving_ap"] = *serving;
      } else {
        e["serving_ap"] = nullptr;
      }
      if (auto sess = upf_.by_ue(u.id)) {
        e["tunnel_id"] = sess->tunnel_id;
      } else {
        e["tunnel_id"] = nullptr;
      }
      json seen = json::array();
      auto it = tunnels_seen_.find(u.id);
      if (it != tunnels_seen_.end())
        for (auto t : it->second) seen.push_back(t);
      e["tunnels_seen"] = std::move(seen);
      sessions.push_back(std::move(e));
    }
    r["sessions"] = std::move(sessions);

    static constexpr std::pair<sim::PacketClass, const char*> kClasses[] = {
        {sim::PacketClass::DATA, "DATA"}, {sim::PacketClass::CMI, "CMI"},
        {sim::PacketClass::NAS, "NAS"},   {sim::PacketClass::MGMT, "MGMT"},
        {sim::PacketClass::N3, "N3"},
    };
    json links = json::array();
    std::uint64_t data_drops = 0;
    for (const sim::Link* l : all_links_) {
      json classes = json::object();
      for (auto [cls, name] : kClasses) {
        const auto& st = l->stats(cls);
        classes[name] = {{"enqueued", st.enqueued},
                         {"delivered", st.delivered},
                         {"dropped", st.dropped},
                         {"bytes_delivered", st.bytes_delivered}};
      }
      data_drops += l->stats(sim::PacketClass::DATA).dropped +
                    l->stats(sim::PacketClass::N3).dropped;
      links.push_back({{"name", l->name()},
                       {"backlog", l->backlog()},
                       {"classes", std::move(classes)}});
    }
    r["links"] = std::move(links);
    r["conflicts"] = conflict_series_;
    r["cmi_messages"] = json(cmi_counts_);
    r["directive_failures"] = op_failures_;

    double total_mbps = static_cast<double>(total_rx_payload) * 8.0 /
                        static_cast<double>(s_.duration_us);
    r["totals"] = {{"rx_payload_bytes", total_rx_payload},
                   {"tx_packets", total_tx_packets},
                   {"rx_packets", total_rx_packets},
                   {"throughput_mbps", total_mbps},
                   {"data_drops", data_drops}};

    const auto& cc = ctl_.counters();
    const auto& wc = wae_.counters();
    std::uint64_t probes_suppressed = 0;
    std::uint64_t assoc_denied = 0;
    std::uint64_t not_associated_drops = 0;
    for (const auto& ap : aps_) {
      probes_suppressed += ap->probes_suppressed;
      assoc_denied += ap->assoc_denied;
      not_associated_drops += ap->not_associated_drops;
    }
    r["counters"] = {
        {"controller.decode_errors", cc.decode_errors},
        {"controller.unknown_node_reports", cc.unknown_node_reports},
        {"controller.flow_op_failures", cc.flow_op_failures},
        {"controller.failed_rules", cc.failed_rules},
        {"controller.retransmissions", cc.retransmissions},
        {"controller.audit_mismatches", cc.audit_mismatches},
        {"controller.audits_ok", cc.audits_ok},
        {"controller.steers_issued", cc.steers_issued},
        {"controller.lb_moves", cc.lb_moves},
        {"controller.cap_clamps", cc.cap_clamps},
        {"controller.slice_op_failures", cc.slice_op_failures},
        {"controller.stray_acks", cc.stray_acks},
        {"controller.errors_received", cc.errors_received},
        {"wae.uplink_unmatched", wc.uplink_unmatched},
        {"wae.no_security_assoc", wc.no_security_assoc},
        {"wae.unknown_tunnel", wc.unknown_tunnel},
        {"wae.nas_unroutable", wc.nas_unroutable},
        {"wae.downlink_unroutable", wc.downlink_unroutable},
        {"wae.ho_buffer_drops", wc.ho_buffer_drops},
        {"wae.handovers", wc.handovers},
        {"wae.steer_ignored", wc.steer_ignored},
        {"wae.ctrl_errors_seen", wc.ctrl_errors_seen},
        {"ap.probes_suppressed", probes_suppressed},
        {"ap.assoc_denied", assoc_denied},
        {"ap.not_associated_drops", not_associated_drops},
        {"amf.challenges_sent", amf_.challenges_sent},
        {"amf.accepts", amf_.accepts},
        {"amf.rejects", amf_.rejects},
        {"upf.unknown_tunnel_drops", upf_.unknown_tunnel_drops},
        {"runner.radio_fade_drops", radio_fade_drops_},
        {"runner.tx_skip_unassociated", tx_skip_unassociated_},
        {"runner.dl_skip_no_session", dl_skip_no_session_},
        {"runner.relay_unmatched", relay_unmatched_},
        {"runner.n3_unknown_tunnel", n3_unknown_tunnel_},
        {"runner.nas_decode_fail", nas_decode_fail_},
        {"engine.events_processed", eng_.events_processed()},
    };
    return r;
  }

  template <typename M>
  static std::uint64_t map_get(const M& m, std::uint32_t k) {
    auto it = m.find(k);
    return it == m.end() ? 0 : it->second;
  }

  // ---- members ----

  const scn::Scenario& s_;
  Mode mode_;
  std::uint64_t seed_;
  const RunOptions& opts_;
  sim::Engine eng_;
  Rng root_rng_;

  std::vector<std::unique_ptr<dp::AccessPoint>> aps_;
  dp::Wae wae_;
  ctrl::RanController ctl_;
  fivegc::Upf upf_;
  fivegc::Amf amf_;

  std::vector<std::unique_ptr<sim::Link>> owned_links_;
  std::vector<sim::Link*> all_links_;
  std::vector<sim::Link*> air_up_, air_down_, bh_up_, bh_down_;
  sim::Link* ctrl_to_wae_ = nullptr;
  sim::Link* wae_to_ctrl_ = nullptr;
  sim::Link* n3_up_ = nullptr;
  sim::Link* n3_down_ = nullptr;
  sim::Link* n2_up_ = nullptr;
  sim::Link* n2_down_ = nullptr;
  dp::SliceScheduler* slice_sched_ = nullptr;

  std::vector<UeState> ues_;
  std::vector<TrafficFlow> tflows_;
  std::uint64_t next_pkt_id_ = 1;

  std::map<FlowKey, FlowAccum> flow_acc_;
  std::map<std::string, std::int64_t> slice_bytes_;
  std::map<std::string, std::vector<std::int64_t>> slice_buckets_;
  std::map<std::uint32_t, std::uint64_t> n3_bytes_by_ue_;
  std::map<std::uint32_t, std::set<std::uint64_t>> tunnels_seen_;
  std::map<std::string, std::uint64_t> cmi_counts_;
  std::map<std::uint32_t, std::uint64_t> flow_add_by_ue_;
  std::map<std::uint32_t, std::uint64_t> nas_rejects_by_ue_;
  std::uint64_t assoc_events_ = 0;
  std::set<std::uint32_t> ever_associated_;
  json conflict_series_ = json::array();
  json op_failures_ = json::array();
  std::uint64_t radio_fade_drops_ = 0;
  std::uint64_t tx_skip_unassociated_ = 0;
  std::uint64_t dl_skip_no_session_ = 0;
  std::uint64_t relay_unmatched_ = 0;
  std::uint64_t n3_unknown_tunnel_ = 0;
  std::uint64_t nas_decode_fail_ = 0;
};

}  // namespace

const char* to_string(Mode m) {
  return m == Mode::Proposed ? "proposed" : "splitmac";
}

std::optional<Mode> mode_from_string(const std::string& s) {
  if (s == "proposed") return Mode::Proposed;
  if (s == "splitmac") return Mode::SplitMac;
  return std::nullopt;
}

json run_scenario(const scn::Scenario& s, Mode mode, std::uint64_t seed,
                  const RunOptions& opts) {
  Simulation sim(s, mode, seed, opts);
  return sim.run();
}

}  // namespace wlansdn::run
