// SPDX-License-Identifier: Apache-2.0
#include "cli_commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace wlansdn::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

bool spill(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  return static_cast<bool>(out.flush());
}

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string quoted = "\"";
  for (char c : cell) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

// Strings go in raw, everything else as its JSON literal; either way the
// cell round-trips to the exact value the JSON report holds.
std::string csv_cell(const json& v) {
  return csv_escape(v.is_string() ? v.get<std::string>() : v.dump());
}

struct SweepPoint {
  std::string mode_name;
  run::Mode mode;
  double load = 0.0;
  std::uint64_t seed = 0;
};

json sweep_row(const SweepPoint& pt, const json& report) {
  return {{"load", pt.load},
          {"mode", pt.mode_name},
          {"seed", pt.seed},
          {"control_rtt_mean_us", report["control_rtt_us"]["mean"]},
          {"control_rtt_p95_us", report["control_rtt_us"]["p95"]},
          {"throughput_mbps", report["totals"]["throughput_mbps"]},
          {"data_drops", report["totals"]["data_drops"]},
          {"digest", report["digest"]}};
}

constexpr const char* kSweepCols[] = {
    "load",        "mode",      "seed",       "control_rtt_mean_us",
    "control_rtt_p95_us", "throughput_mbps", "data_drops", "digest"};

void print_sweep_table(const json& rows, std::ostream& out) {
  std::vector<std::vector<std::string>> cells;
  cells.emplace_back(std::begin(kSweepCols), std::end(kSweepCols));
  for (const auto& r : rows) {
    std::vector<std::string> line;
    for (const char* c : kSweepCols) {
      const json& v = r.at(c);
      line.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& line : cells)
    for (std::size_t i = 0; i < line.size(); ++i)
      width[i] = std::max(width[i], line[i].size());
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i)
      out << std::setw(static_cast<int>(width[i])) << line[i]
          << (i + 1 == line.size() ? "" : "  ");
    out << "\n";
  }
}

}  // namespace

std::optional<scn::Scenario> load_scenario_file(const std::string& path,
                                                std::ostream& err) {
  auto text = slurp(path);
  if (!text) {
    err << path << ": cannot read file\n";
    return std::nullopt;
  }
  try {
    return scn::load_scenario(*text);
  } catch (const scn::ParseError& e) {
    err << path << ":" << e.line() << ": " << e.reason() << "\n";
  } catch (const scn::ValidationError& e) {
    for (const auto& p : e.problems()) err << path << ": " << p << "\n";
  }
  return std::nullopt;
}

int cmd_validate(const std::string& scenario_path, std::ostream& out,
                 std::ostream& err) {
  auto s = load_scenario_file(scenario_path, err);
  if (!s) return kExitBadScenario;
  out << scenario_path << ": ok (" << s->aps.size() << " aps, "
      << s->subscribers.size() << " subscribers, "
      << s->duration_us / 1000000.0 << " s)\n";
  return kExitOk;
}

std::string report_to_csv(const json& report) {
  std::string csv = "metric,value\n";
  const json flat = report.flatten();
  for (const auto& [ptr, v] : flat.items()) {
    csv += csv_escape(ptr);
    csv += ',';
    csv += csv_cell(v);
    csv += '\n';
  }
  return csv;
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  auto s = load_scenario_file(a.scenario_path, err);
  if (!s) return kExitBadScenario;
  auto mode = run::mode_from_string(a.mode);
  if (!mode) {
    err << "unknown mode '" << a.mode << "'\n";
    return kExitBadScenario;
  }
  json report;
  try {
    report = run::run_scenario(*s, *mode, a.seed);
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return kExitRuntime;
  }

  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  fs::path dir(a.out_dir);
  fs::path report_path = dir / "report.json";
  fs::path csv_path = dir / "metrics.csv";
  if (!spill(report_path, report.dump(2) + "\n")) {
    err << "cannot write " << report_path.string() << "\n";
    fs::remove(report_path, ec);
    return kExitRuntime;
  }
  if (!spill(csv_path, report_to_csv(report))) {
    err << "cannot write " << csv_path.string() << "\n";
    // Half a report is worse than none.
    fs::remove(report_path, ec);
    fs::remove(csv_path, ec);
    return kExitRuntime;
  }
  out << "wrote " << report_path.string() << " and " << csv_path.string()
      << "\n";
  out << "digest " << report["digest"].get<std::string>() << ", throughput "
      << report["totals"]["throughput_mbps"].dump() << " Mb/s, data drops "
      << report["totals"]["data_drops"].dump() << "\n";
  return kExitOk;
}

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  auto s = load_scenario_file(a.scenario_path, err);
  if (!s) return kExitBadScenario;
  if (a.loads.empty()) {
    err << "no load points\n";
    return kExitBadScenario;
  }
  for (double l : a.loads) {
    if (l < 0) {
      err << "load multipliers must be non-negative\n";
      return kExitBadScenario;
    }
  }

  std::vector<SweepPoint> points;
  for (const auto& m : a.modes) {
    auto mode = run::mode_from_string(m);
    if (!mode) {
      err << "unknown mode '" << m << "'\n";
      return kExitBadScenario;
    }
    for (std::size_t i = 0; i < a.loads.size(); ++i) {
      // seed ^ index keeps points independent but reproducible, and gives
      // the two modes identical arrivals at the same load point.
      points.push_back(
          {m, *mode, a.loads[i], a.seed ^ static_cast<std::uint64_t>(i)});
    }
  }

  // Engines are independent; points run in parallel, assembly stays
  // in declaration order so output is deterministic.
  std::vector<std::future<json>> futs;
  futs.reserve(points.size());
  for (const auto& pt : points) {
    futs.push_back(std::async(std::launch::async, [&s, pt] {
      run::RunOptions opts;
      opts.load_multiplier = pt.load;
      return run::run_scenario(*s, pt.mode, pt.seed, opts);
    }));
  }

  json rows = json::array();
  try {
    for (std::size_t i = 0; i < points.size(); ++i)
      rows.push_back(sweep_row(points[i], futs[i].get()));
  } catch (const std::exception& e) {
    err << "sweep point failed: " << e.what() << "\n";
    return kExitRuntime;
  }

  json doc = {{"schema", run::kReportSchema},
              {"scenario", s->name},
              {"base_seed", a.seed},
              {"rows", rows}};
  std::string csv;
  {
    std::ostringstream head;
    for (std::size_t i = 0; i < std::size(kSweepCols); ++i)
      head << kSweepCols[i] << (i + 1 == std::size(kSweepCols) ? "\n" : ",");
    csv = head.str();
    for (const auto& r : rows) {
      std::ostringstream line;
      for (std::size_t i = 0; i < std::size(kSweepCols); ++i)
        line << csv_cell(r.at(kSweepCols[i]))
             << (i + 1 == std::size(kSweepCols) ? "\n" : ",");
      csv += line.str();
    }
  }

  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  fs::path dir(a.out_dir);
  if (!spill(dir / "sweep.json", doc.dump(2) + "\n") ||
      !spill(dir / "sweep.csv", csv)) {
    err << "cannot write sweep outputs under " << a.out_dir << "\n";
    fs::remove(dir / "sweep.json", ec);
    fs::remove(dir / "sweep.csv", ec);
    return kExitRuntime;
  }
  print_sweep_table(rows, out);
  out << "wrote " << (dir / "sweep.json").string() << " and "
      << (dir / "sweep.csv").string() << "\n";
  return kExitOk;
}

int cmd_replay(const ReplayArgs& a, std::ostream& out, std::ostream& err) {
  fs::path report_path = fs::path(a.out_dir) / "report.json";
  auto text = slurp(report_path.string());
  if (!text) {
    err << report_path.string() << ": cannot read file\n";
    return kExitBadScenario;
  }
  json old = json::parse(*text, nullptr, false);
  if (old.is_discarded() || !old.contains("digest") || !old.contains("mode") ||
      !old.contains("seed")) {
    err << report_path.string() << ": not a run report\n";
    return kExitBadScenario;
  }
  auto s = load_scenario_file(a.scenario_path, err);
  if (!s) return kExitBadScenario;
  if (old.value("name", "") != s->name) {
    err << "warning: report was recorded for scenario '"
        << old.value("name", "") << "', replaying '" << s->name << "'\n";
  }
  auto mode = run::mode_from_string(old["mode"].get<std::string>());
  if (!mode) {
    err << report_path.string() << ": unknown mode in report\n";
    return kExitBadScenario;
  }
  json fresh;
  try {
    fresh = run::run_scenario(*s, *mode, old["seed"].get<std::uint64_t>());
  } catch (const std::exception& e) {
    err << "replay failed: " << e.what() << "\n";
    return kExitRuntime;
  }
  std::string want = old["digest"].get<std::string>();
  std::string got = fresh["digest"].get<std::string>();
  if (want != got) {
    err << "digest mismatch: recorded " << want << ", replay " << got << "\n";
    return kExitRuntime;
  }
  out << "digest " << got << " confirmed\n";
  return kExitOk;
}

}  // namespace wlansdn::cli
