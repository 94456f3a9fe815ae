// SPDX-License-Identifier: Apache-2.0
#include "wlansdn/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <set>
#include <sstream>

namespace wlansdn::scn {
namespace {

const std::map<std::string, LinkSpec>& default_links() {
  static const std::map<std::string, LinkSpec> kDefaults = {
      {"wireless", {50.0, 5}},  {"backhaul", {1000.0, 20}},
      {"cmi", {100.0, 200}},    {"n2", {100.0, 200}},
      {"n3", {100.0, 500}},
  };
  return kDefaults;
}

// Accepts both storage flavors: text parses land as number_unsigned,
// values assigned from C++ ints as number_integer.
bool is_uint(const json& j) {
  return j.is_number_unsigned() ||
         (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}
bool is_int(const json& j) { return j.is_number_integer(); }
bool is_num(const json& j) { return j.is_number(); }

std::string fmt(const char* f, const std::string& a) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a.c_str());
  return buf;
}

// Appends problems for keys not in `allowed`.
void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& path, std::vector<std::string>& out) {
  for (const auto& [k, v] : obj.items()) {
    (void)v;
    if (!allowed.count(k))
      out.push_back(path + ": unknown key '" + k + "'");
  }
}

bool valid_vec2(const json& j) {
  return j.is_array() && j.size() == 2 && is_num(j[0]) && is_num(j[1]);
}

sim::Vec2 vec2_of(const json& j) {
  return {j[0].get<double>(), j[1].get<double>()};
}

json vec2_json(sim::Vec2 v) { return json::array({v.x, v.y}); }

bool valid_hex_key(const std::string& s) {
  if (s.size() != 32) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isxdigit(c) != 0;
  });
}

fivegc::AuthKey key_of(const std::string& hex) {
  fivegc::AuthKey k{};
  for (std::size_t i = 0; i < k.size(); ++i) {
    unsigned v = 0;
    std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, v, 16);
    k[i] = static_cast<std::uint8_t>(v);
  }
  return k;
}

std::string key_hex(const fivegc::AuthKey& k) {
  static const char* kDigits = "0123456789abcdef";
  std::string s;
  s.reserve(32);
  for (auto b : k) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xf]);
  }
  return s;
}

bool valid_slice_obj(const json& j, const std::string& path,
                     std::vector<std::string>& out) {
  if (!j.is_object()) {
    out.push_back(path + ": slice must be an object");
    return false;
  }
  bool ok = true;
  check_keys(j, {"id", "weight", "rate_cap_mbps", "ues", "traffic_classes"},
             path, out);
  if (!j.contains("id") || !j["id"].is_string() ||
      j["id"].get<std::string>().empty()) {
    out.push_back(path + ": slice id must be a non-empty string");
    ok = false;
  } else if (j["id"].get<std::string>() == dp::kDefaultSliceId) {
    out.push_back(path + ": slice id '" + std::string(dp::kDefaultSliceId) +
                  "' is reserved");
    ok = false;
  }
  if (j.contains("weight") && (!is_uint(j["weight"]) || j["weight"] == 0)) {
    out.push_back(path + ": weight must be a positive integer");
    ok = false;
  }
  if (j.contains("rate_cap_mbps") &&
      (!is_num(j["rate_cap_mbps"]) || j["rate_cap_mbps"].get<double>() < 0)) {
    out.push_back(path + ": rate_cap_mbps must be a non-negative number");
    ok = false;
  }
  for (const char* arr : {"ues", "traffic_classes"}) {
    if (!j.contains(arr)) continue;
    if (!j[arr].is_array()) {
      out.push_back(path + "." + arr + ": must be an array");
      ok = false;
      continue;
    }
    for (const auto& e : j[arr]) {
      bool want_uint = std::string(arr) == "ues";
      if (want_uint ? !is_uint(e) : !e.is_string()) {
        out.push_back(path + "." + arr + ": bad element type");
        ok = false;
        break;
      }
    }
  }
  return ok;
}

dp::SliceDef slice_from_json_impl(const json& j) {
  dp::SliceDef s;
  s.id = j["id"].get<std::string>();
  s.weight = j.value("weight", 1u);
  s.rate_cap_mbps = j.value("rate_cap_mbps", 0.0);
  for (const auto& u : j.value("ues", json::array()))
    s.ues.insert(u.get<std::uint32_t>());
  for (const auto& t : j.value("traffic_classes", json::array()))
    s.traffic_classes.insert(t.get<std::string>());
  return s;
}

json slice_to_json_impl(const dp::SliceDef& s) {
  json j;
  j["id"] = s.id;
  j["weight"] = s.weight;
  j["rate_cap_mbps"] = s.rate_cap_mbps;
  j["ues"] = json::array();
  for (auto u : s.ues) j["ues"].push_back(u);
  j["traffic_classes"] = json::array();
  for (const auto& t : s.traffic_classes) j["traffic_classes"].push_back(t);
  return j;
}

void check_directive(const json& d, std::size_t i, std::size_t n_aps,
                     std::size_t n_ues, std::int64_t duration,
                     std::vector<std::string>& out) {
  std::string path = "directives[" + std::to_string(i) + "]";
  if (!d.is_object()) {
    out.push_back(path + ": must be an object");
    return;
  }
  check_keys(d, {"time_us", "op", "args"}, path, out);
  if (!d.contains("time_us") || !is_uint(d["time_us"]) ||
      d["time_us"].get<std::int64_t>() > duration)
    out.push_back(path + ": time_us must be an integer within the horizon");
  if (!d.contains("op") || !d["op"].is_string()) {
    out.push_back(path + ": missing op");
    return;
  }
  const std::string op = d["op"].get<std::string>();
  const json args = d.value("args", json::object());
  if (!args.is_object()) {
    out.push_back(path + ": args must be an object");
    return;
  }
  auto need_uint = [&](const char* k, std::size_t limit, const char* what) {
    if (!args.contains(k) || !is_uint(args[k]) ||
        args[k].get<std::size_t>() >= limit)
      out.push_back(path + ": args." + std::string(k) + " must name a known " +
                    what);
  };
  if (op == "slice_create" || op == "slice_update") {
    check_keys(args, {"slice"}, path + ".args", out);
    if (!args.contains("slice"))
      out.push_back(path + ": args.slice required");
    else if (valid_slice_obj(args["slice"], path + ".args.slice", out)) {
      for (auto u : args["slice"].value("ues", json::array()))
        if (u.get<std::size_t>() >= n_ues)
          out.push_back(path + ": slice references unknown terminal");
    }
  } else if (op == "slice_delete") {
    check_keys(args, {"slice_id", "force"}, path + ".args", out);
    if (!args.contains("slice_id") || !args["slice_id"].is_string())
      out.push_back(path + ": args.slice_id required");
    if (args.contains("force") && !args["force"].is_boolean())
      out.push_back(path + ": args.force must be a boolean");
  } else if (op == "push_config") {
    check_keys(args, {"ap", "config"}, path + ".args", out);
    need_uint("ap", n_aps, "radio");
    if (!args.contains("config") || !args["config"].is_object())
      out.push_back(path + ": args.config must be an object");
  } else if (op == "steer_ue") {
    check_keys(args, {"ue", "target_ap"}, path + ".args", out);
    need_uint("ue", n_ues, "terminal");
    need_uint("target_ap", n_aps, "radio");
  } else {
    out.push_back(path + ": unknown op '" + op + "'");
  }
}

void check_traffic(const json& t, const std::string& path,
                   std::int64_t duration, std::vector<std::string>& out) {
  if (!t.is_object()) {
    out.push_back(path + ": must be an object");
    return;
  }
  check_keys(t,
             {"kind", "direction", "rate_mbps", "packet_bytes", "start_us",
              "stop_us", "traffic_class", "mean_on_us", "mean_off_us"},
             path, out);
  if (t.contains("kind")) {
    std::string k = t["kind"].is_string() ? t["kind"].get<std::string>() : "";
    if (k != "cbr" && k != "onoff")
      out.push_back(path + ": kind must be 'cbr' or 'onoff'");
  }
  if (t.contains("direction")) {
    std::string d =
        t["direction"].is_string() ? t["direction"].get<std::string>() : "";
    if (d != "uplink" && d != "downlink")
      out.push_back(path + ": direction must be 'uplink' or 'downlink'");
  }
  if (t.contains("rate_mbps") &&
      (!is_num(t["rate_mbps"]) || t["rate_mbps"].get<double>() <= 0))
    out.push_back(path + ": rate_mbps must be positive");
  if (t.contains("packet_bytes")) {
    bool ok = is_uint(t["packet_bytes"]);
    auto v = ok ? t["packet_bytes"].get<std::uint64_t>() : 0;
    if (!ok || v < 64 || v > 1500)
      out.push_back(path + ": packet_bytes must be in [64, 1500]");
  }
  if (t.contains("start_us") && !is_uint(t["start_us"]))
    out.push_back(path + ": start_us must be a non-negative integer");
  if (t.contains("stop_us") && t["stop_us"] != -1 &&
      (!is_uint(t["stop_us"]) || t["stop_us"].get<std::int64_t>() > duration))
    out.push_back(path + ": stop_us must be -1 or within the horizon");
  for (const char* k : {"mean_on_us", "mean_off_us"})
    if (t.contains(k) && (!is_uint(t[k]) || t[k] == 0))
      out.push_back(path + ": " + std::string(k) + " must be positive");
}

TrafficSpec traffic_of(const json& t) {
  TrafficSpec s;
  s.kind = t.value("kind", "cbr") == std::string("onoff")
               ? TrafficSpec::Kind::OnOff
               : TrafficSpec::Kind::Cbr;
  s.downlink = t.value("direction", "uplink") == std::string("downlink");
  s.rate_mbps = t.value("rate_mbps", 1.0);
  s.packet_bytes = t.value("packet_bytes", 1250u);
  s.start_us = t.value("start_us", std::int64_t{0});
  s.stop_us = t.value("stop_us", std::int64_t{-1});
  s.traffic_class = t.value("traffic_class", "default");
  s.mean_on_us = t.value("mean_on_us", std::int64_t{500000});
  s.mean_off_us = t.value("mean_off_us", std::int64_t{500000});
  return s;
}

json traffic_json(const TrafficSpec& s) {
  json t;
  t["kind"] = s.kind == TrafficSpec::Kind::OnOff ? "onoff" : "cbr";
  t["direction"] = s.downlink ? "downlink" : "uplink";
  t["rate_mbps"] = s.rate_mbps;
  t["packet_bytes"] = s.packet_bytes;
  t["start_us"] = s.start_us;
  t["stop_us"] = s.stop_us;
  t["traffic_class"] = s.traffic_class;
  t["mean_on_us"] = s.mean_on_us;
  t["mean_off_us"] = s.mean_off_us;
  return t;
}

}  // namespace

dp::SliceDef slice_from_json(const json& j) { return slice_from_json_impl(j); }
json slice_to_json(const dp::SliceDef& s) { return slice_to_json_impl(s); }

ParseError::ParseError(int line, std::string reason)
    : std::runtime_error("parse error at line " + std::to_string(line) + ": " +
                         reason),
      line_(line),
      reason_(std::move(reason)) {}

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::runtime_error(problems.empty()
                             ? std::string("invalid scenario")
                             : "invalid scenario: " + problems.front() +
                                   (problems.size() > 1
                                        ? " (+" +
                                              std::to_string(problems.size() -
                                                             1) +
                                              " more)"
                                        : "")),
      problems_(std::move(problems)) {}

std::vector<std::string> scenario_problems(const json& doc) {
  std::vector<std::string> out;
  if (!doc.is_object()) {
    out.push_back("document must be a JSON object");
    return out;
  }
  check_keys(doc,
             {"schema", "name", "duration_us", "seed", "topology",
              "subscribers", "ue_behaviors", "apps", "slices", "directives",
              "assoc_bias_db", "stats_period_us", "audit_period_us"},
             "document", out);
  if (!doc.contains("schema") || doc["schema"] != kScenarioSchema)
    out.push_back("schema must be present and equal to " +
                  std::to_string(kScenarioSchema));
  if (doc.contains("name") && !doc["name"].is_string())
    out.push_back("name must be a string");
  std::int64_t duration = 0;
  if (!doc.contains("duration_us") || !is_uint(doc["duration_us"]) ||
      doc["duration_us"] == 0)
    out.push_back("duration_us must be a positive integer");
  else
    duration = doc["duration_us"].get<std::int64_t>();
  if (doc.contains("seed") && !is_uint(doc["seed"]))
    out.push_back("seed must be a non-negative integer");
  for (const char* k : {"stats_period_us", "audit_period_us"})
    if (doc.contains(k) && (!is_uint(doc[k]) || doc[k] == 0))
      out.push_back(std::string(k) + " must be a positive integer");

  std::size_t n_aps = 0;
  const json topo = doc.value("topology", json::object());
  if (!topo.is_object()) {
    out.push_back("topology must be an object");
  } else {
    check_keys(topo, {"aps", "wae_pos", "links"}, "topology", out);
    if (!topo.contains("aps") || !topo["aps"].is_array() ||
        topo["aps"].empty()) {
      out.push_back("topology.aps must be a non-empty array");
    } else {
      n_aps = topo["aps"].size();
      for (std::size_t i = 0; i < n_aps; ++i) {
        const json& a = topo["aps"][i];
        std::string path = "topology.aps[" + std::to_string(i) + "]";
        if (!a.is_object()) {
          out.push_back(path + ": must be an object");
          continue;
        }
        check_keys(a, {"pos", "channel", "tx_power_dbm"}, path, out);
        if (!a.contains("pos") || !valid_vec2(a["pos"]))
          out.push_back(path + ".pos must be [x, y]");
        if (a.contains("channel")) {
          bool ok = is_int(a["channel"]);
          int ch = ok ? a["channel"].get<int>() : 0;
          if (!ok || std::find(std::begin(kAllowedChannels),
                               std::end(kAllowedChannels),
                               ch) == std::end(kAllowedChannels))
            out.push_back(path + ".channel must be one of 1, 6, 11");
        }
        if (a.contains("tx_power_dbm")) {
          bool ok = is_num(a["tx_power_dbm"]);
          double p = ok ? a["tx_power_dbm"].get<double>() : -1;
          if (!ok || p < 0 || p > 30)
            out.push_back(path + ".tx_power_dbm must be in [0, 30]");
        }
      }
    }
    if (topo.contains("wae_pos") && !valid_vec2(topo["wae_pos"]))
      out.push_back("topology.wae_pos must be [x, y]");
    const json links = topo.value("links", json::object());
    if (!links.is_object()) {
      out.push_back("topology.links must be an object");
    } else {
      for (const auto& [role, spec] : links.items()) {
        if (!default_links().count(role)) {
          out.push_back(fmt("topology.links: unknown role '%s'", role));
          continue;
        }
        std::string path = "topology.links." + role;
        if (!spec.is_object()) {
          out.push_back(path + ": must be an object");
          continue;
        }
        check_keys(spec, {"capacity_mbps", "delay_us"}, path, out);
        if (spec.contains("capacity_mbps") &&
            (!is_num(spec["capacity_mbps"]) ||
             spec["capacity_mbps"].get<double>() <= 0))
          out.push_back(path + ".capacity_mbps must be positive");
        if (spec.contains("delay_us") && !is_uint(spec["delay_us"]))
          out.push_back(path + ".delay_us must be a non-negative integer");
      }
    }
  }

  std::size_t n_ues = 0;
  if (doc.contains("subscribers")) {
    if (!doc["subscribers"].is_array()) {
      out.push_back("subscribers must be an array");
    } else {
      n_ues = doc["subscribers"].size();
      for (std::size_t i = 0; i < n_ues; ++i) {
        const json& s = doc["subscribers"][i];
        std::string path = "subscribers[" + std::to_string(i) + "]";
        if (!s.is_object()) {
          out.push_back(path + ": must be an object");
          continue;
        }
        check_keys(s, {"key", "corrupt_key", "qos"}, path, out);
        if (!s.contains("key") || !s["key"].is_string() ||
            !valid_hex_key(s["key"].get<std::string>()))
          out.push_back(path + ".key must be 32 hex characters");
        if (s.contains("corrupt_key") && !s["corrupt_key"].is_boolean())
          out.push_back(path + ".corrupt_key must be a boolean");
        if (s.contains("qos")) {
          const json& q = s["qos"];
          if (!q.is_object()) {
            out.push_back(path + ".qos must be an object");
          } else {
            check_keys(q, {"rate_mbps", "priority", "latency_budget_us"},
                       path + ".qos", out);
            if (q.contains("rate_mbps") &&
                (!is_num(q["rate_mbps"]) || q["rate_mbps"].get<double>() <= 0))
              out.push_back(path + ".qos.rate_mbps must be positive");
            if (q.contains("priority") && !is_int(q["priority"]))
              out.push_back(path + ".qos.priority must be an integer");
            if (q.contains("latency_budget_us") &&
                !is_uint(q["latency_budget_us"]))
              out.push_back(path +
                            ".qos.latency_budget_us must be non-negative");
          }
        }
      }
    }
  }

  if (doc.contains("ue_behaviors")) {
    if (!doc["ue_behaviors"].is_array()) {
      out.push_back("ue_behaviors must be an array");
    } else {
      if (doc["ue_behaviors"].size() > n_ues)
        out.push_back("ue_behaviors has more entries than subscribers");
      for (std::size_t i = 0; i < doc["ue_behaviors"].size(); ++i) {
        const json& b = doc["ue_behaviors"][i];
        std::string path = "ue_behaviors[" + std::to_string(i) + "]";
        if (!b.is_object()) {
          out.push_back(path + ": must be an object");
          continue;
        }
        check_keys(b, {"appear_us", "waypoints", "traffic"}, path, out);
        if (b.contains("appear_us") && !is_uint(b["appear_us"]))
          out.push_back(path + ".appear_us must be a non-negative integer");
        if (!b.contains("waypoints") || !b["waypoints"].is_array() ||
            b["waypoints"].empty()) {
          out.push_back(path + ".waypoints must be a non-empty array");
        } else {
          std::int64_t prev = -1;
          for (const auto& w : b["waypoints"]) {
            if (!w.is_array() || w.size() != 2 || !is_uint(w[0]) ||
                !valid_vec2(w[1])) {
              out.push_back(path + ".waypoints: entries must be [t, [x, y]]");
              break;
            }
            auto t = w[0].get<std::int64_t>();
            if (t < prev) {
              out.push_back(path + ".waypoints: times must be non-decreasing");
              break;
            }
            prev = t;
          }
        }
        const json traffic = b.value("traffic", json::array());
        if (!traffic.is_array()) {
          out.push_back(path + ".traffic must be an array");
        } else {
          for (std::size_t t = 0; t < traffic.size(); ++t)
            check_traffic(traffic[t],
                          path + ".traffic[" + std::to_string(t) + "]",
                          duration, out);
        }
      }
    }
  }

  if (doc.contains("apps")) {
    const json& a = doc["apps"];
    if (!a.is_object()) {
      out.push_back("apps must be an object");
    } else {
      check_keys(a,
                 {"load_balancer", "admission", "admission_threshold",
                  "handover", "ho_hysteresis_db", "ho_consecutive_reports",
                  "channel_mgmt", "channel_period_us"},
                 "apps", out);
      for (const char* k :
           {"load_balancer", "admission", "handover", "channel_mgmt"})
        if (a.contains(k) && !a[k].is_boolean())
          out.push_back("apps." + std::string(k) + " must be a boolean");
      if (a.contains("admission_threshold") &&
          (!is_uint(a["admission_threshold"]) || a["admission_threshold"] == 0))
        out.push_back("apps.admission_threshold must be a positive integer");
      if (a.contains("ho_hysteresis_db") &&
          (!is_num(a["ho_hysteresis_db"]) ||
           a["ho_hysteresis_db"].get<double>() < 0))
        out.push_back("apps.ho_hysteresis_db must be non-negative");
      if (a.contains("ho_consecutive_reports") &&
          (!is_uint(a["ho_consecutive_reports"]) ||
           a["ho_consecutive_reports"] == 0))
        out.push_back("apps.ho_consecutive_reports must be positive");
      if (a.contains("channel_period_us") &&
          (!is_uint(a["channel_period_us"]) || a["channel_period_us"] == 0))
        out.push_back("apps.channel_period_us must be positive");
    }
  }

  if (doc.contains("slices")) {
    if (!doc["slices"].is_array()) {
      out.push_back("slices must be an array");
    } else {
      std::vector<dp::SliceDef> defs;
      std::set<std::string> ids;
      for (std::size_t i = 0; i < doc["slices"].size(); ++i) {
        std::string path = "slices[" + std::to_string(i) + "]";
        if (!valid_slice_obj(doc["slices"][i], path, out)) continue;
        dp::SliceDef def = slice_from_json(doc["slices"][i]);
        if (!ids.insert(def.id).second)
          out.push_back(path + ": duplicate slice id '" + def.id + "'");
        for (auto u : def.ues)
          if (u >= n_ues)
            out.push_back(path + ": references unknown terminal " +
                          std::to_string(u));
        for (const auto& other : defs)
          if (dp::slices_overlap(def, other))
            out.push_back(path + ": template overlaps slice '" + other.id +
                          "'");
        defs.push_back(std::move(def));
      }
    }
  }

  if (doc.contains("directives")) {
    if (!doc["directives"].is_array()) {
      out.push_back("directives must be an array");
    } else {
      for (std::size_t i = 0; i < doc["directives"].size(); ++i)
        check_directive(doc["directives"][i], i, n_aps, n_ues, duration, out);
    }
  }

  if (doc.contains("assoc_bias_db")) {
    if (!doc["assoc_bias_db"].is_object()) {
      out.push_back("assoc_bias_db must be an object keyed by radio index");
    } else {
      for (const auto& [k, v] : doc["assoc_bias_db"].items()) {
        std::size_t ap = 0;
        auto [p, ec] = std::from_chars(k.data(), k.data() + k.size(), ap);
        if (ec != std::errc{} || p != k.data() + k.size() || ap >= n_aps ||
            !is_num(v))
          out.push_back("assoc_bias_db: bad entry '" + k + "'");
      }
    }
  }
  return out;
}

Scenario scenario_from_json(const json& doc) {
  if (auto problems = scenario_problems(doc); !problems.empty())
    throw ValidationError(std::move(problems));

  Scenario s;
  s.name = doc.value("name", "scenario");
  s.duration_us = doc["duration_us"].get<std::int64_t>();
  s.seed = doc.value("seed", std::uint64_t{1});
  s.stats_period_us = doc.value("stats_period_us", std::int64_t{200000});
  s.audit_period_us = doc.value("audit_period_us", std::int64_t{10000});

  const json& topo = doc["topology"];
  for (const auto& a : topo["aps"]) {
    ApSpec ap;
    ap.pos = vec2_of(a["pos"]);
    ap.channel = a.value("channel", 1);
    ap.tx_power_dbm = a.value("tx_power_dbm", 20.0);
    s.aps.push_back(ap);
  }
  if (topo.contains("wae_pos")) s.wae_pos = vec2_of(topo["wae_pos"]);
  s.links = default_links();
  const json links = topo.value("links", json::object());
  for (const auto& [role, spec] : links.items()) {
    LinkSpec& ls = s.links[role];
    ls.capacity_mbps = spec.value("capacity_mbps", ls.capacity_mbps);
    ls.delay_us = spec.value("delay_us", ls.delay_us);
  }

  for (const auto& sub : doc.value("subscribers", json::array())) {
    Subscriber u;
    u.key = key_of(sub["key"].get<std::string>());
    u.corrupt_key = sub.value("corrupt_key", false);
    const json q = sub.value("qos", json::object());
    u.qos.rate_mbps = q.value("rate_mbps", u.qos.rate_mbps);
    u.qos.priority = q.value("priority", u.qos.priority);
    u.qos.latency_budget_us =
        q.value("latency_budget_us", u.qos.latency_budget_us);
    s.subscribers.push_back(u);
  }

  for (const auto& b : doc.value("ue_behaviors", json::array())) {
    UeBehavior beh;
    beh.appear_us = b.value("appear_us", std::int64_t{0});
    for (const auto& w : b["waypoints"])
      beh.waypoints.emplace_back(w[0].get<std::int64_t>(), vec2_of(w[1]));
    for (const auto& t : b.value("traffic", json::array()))
      beh.traffic.push_back(traffic_of(t));
    s.behaviors.push_back(std::move(beh));
  }
  // Subscribers without an explicit behavior stay dormant at the origin.
  while (s.behaviors.size() < s.subscribers.size()) {
    UeBehavior beh;
    beh.appear_us = s.duration_us;
    beh.waypoints.emplace_back(0, sim::Vec2{});
    s.behaviors.push_back(std::move(beh));
  }

  const json a = doc.value("apps", json::object());
  s.apps.load_balancer = a.value("load_balancer", false);
  s.apps.admission = a.value("admission", false);
  s.apps.admission_threshold = a.value("admission_threshold", 8);
  s.apps.handover = a.value("handover", false);
  s.apps.ho.hysteresis_db = a.value("ho_hysteresis_db", 3.0);
  s.apps.ho.consecutive_reports = a.value("ho_consecutive_reports", 2);
  s.apps.channel_mgmt = a.value("channel_mgmt", false);
  s.apps.channel_period_us =
      a.value("channel_period_us", std::int64_t{1000000});

  for (const auto& sl : doc.value("slices", json::array()))
    s.slices.push_back(slice_from_json(sl));

  for (const auto& d : doc.value("directives", json::array())) {
    Directive dir;
    dir.time_us = d["time_us"].get<std::int64_t>();
    dir.op = d["op"].get<std::string>();
    dir.args = d.value("args", json::object());
    s.directives.push_back(std::move(dir));
  }

  const json bias = doc.value("assoc_bias_db", json::object());
  for (const auto& [k, v] : bias.items())
    s.assoc_bias_db[static_cast<std::uint32_t>(std::stoul(k))] =
        v.get<double>();
  return s;
}

json scenario_to_json(const Scenario& s) {
  json doc;
  doc["schema"] = kScenarioSchema;
  doc["name"] = s.name;
  doc["duration_us"] = s.duration_us;
  doc["seed"] = s.seed;
  doc["stats_period_us"] = s.stats_period_us;
  doc["audit_period_us"] = s.audit_period_us;

  json aps = json::array();
  for (const auto& ap : s.aps) {
    json a;
    a["pos"] = vec2_json(ap.pos);
    a["channel"] = ap.channel;
    a["tx_power_dbm"] = ap.tx_power_dbm;
    aps.push_back(std::move(a));
  }
  json links = json::object();
  for (const auto& [role, spec] : s.links) {
    links[role] = {{"capacity_mbps", spec.capacity_mbps},
                   {"delay_us", spec.delay_us}};
  }
  doc["topology"] = {{"aps", std::move(aps)},
                     {"wae_pos", vec2_json(s.wae_pos)},
                     {"links", std::move(links)}};

  doc["subscribers"] = json::array();
  for (const auto& u : s.subscribers) {
    json sub;
    sub["key"] = key_hex(u.key);
    sub["corrupt_key"] = u.corrupt_key;
    sub["qos"] = {{"rate_mbps", u.qos.rate_mbps},
                  {"priority", u.qos.priority},
                  {"latency_budget_us", u.qos.latency_budget_us}};
    doc["subscribers"].push_back(std::move(sub));
  }

  doc["ue_behaviors"] = json::array();
  for (const auto& b : s.behaviors) {
    json beh;
    beh["appear_us"] = b.appear_us;
    beh["waypoints"] = json::array();
    for (const auto& [t, p] : b.waypoints)
      beh["waypoints"].push_back(json::array({t, vec2_json(p)}));
    beh["traffic"] = json::array();
    for (const auto& t : b.traffic) beh["traffic"].push_back(traffic_json(t));
    doc["ue_behaviors"].push_back(std::move(beh));
  }

  doc["apps"] = {{"load_balancer", s.apps.load_balancer},
                 {"admission", s.apps.admission},
                 {"admission_threshold", s.apps.admission_threshold},
                 {"handover", s.apps.handover},
                 {"ho_hysteresis_db", s.apps.ho.hysteresis_db},
                 {"ho_consecutive_reports", s.apps.ho.consecutive_reports},
                 {"channel_mgmt", s.apps.channel_mgmt},
                 {"channel_period_us", s.apps.channel_period_us}};

  doc["slices"] = json::array();
  for (const auto& sl : s.slices) doc["slices"].push_back(slice_to_json(sl));

  doc["directives"] = json::array();
  for (const auto& d : s.directives)
    doc["directives"].push_back(
        {{"time_us", d.time_us}, {"op", d.op}, {"args", d.args}});

  doc["assoc_bias_db"] = json::object();
  for (const auto& [ap, db] : s.assoc_bias_db)
    doc["assoc_bias_db"][std::to_string(ap)] = db;
  return doc;
}

Scenario load_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; convert to a line number.
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw ParseError(static_cast<int>(line), e.what());
  }
  return scenario_from_json(doc);
}

LinkSpec link_or_default(const Scenario& s, const std::string& role) {
  auto it = s.links.find(role);
  if (it != s.links.end()) return it->second;
  return default_links().at(role);
}

}  // namespace wlansdn::scn
