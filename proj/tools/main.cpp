// SPDX-License-Identifier: Apache-2.0
#include <csignal>
#include <iostream>

#include "CLI11.hpp"

#include "cli_commands.hpp"
#include "wlansdn/cmi_tcp.hpp"

namespace {

wlansdn::svc::CmiTcpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(std::uint16_t port, std::uint32_t aps, std::uint32_t ues) {
  wlansdn::ctrl::RanController::Config cfg;
  cfg.ap_count = aps;
  cfg.ue_count = ues;
  wlansdn::svc::CmiTcpServer server(cfg, port);
  if (!server.bind()) {
    std::cerr << server.error() << "\n";
    return wlansdn::cli::kExitRuntime;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "controller listening on 127.0.0.1:" << server.port()
            << " (ctrl-c to stop)\n";
  server.run();
  g_server = nullptr;
  std::cout << "served " << server.sessions_served() << " session(s)\n";
  return wlansdn::cli::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace wlansdn;

  CLI::App app{"wlan sdn experiment driver"};
  app.require_subcommand(1);

  std::string scenario;
  cli::RunArgs run_args;
  cli::SweepArgs sweep_args;
  cli::ReplayArgs replay_args;
  std::uint16_t port = svc::kCmiDefaultPort;
  std::uint32_t serve_aps = 4;
  std::uint32_t serve_ues = 16;

  auto* validate = app.add_subcommand("validate", "parse and check a scenario");
  validate->add_option("--scenario", scenario, "scenario file")->required();

  auto* runc = app.add_subcommand("run", "run one scenario, write reports");
  runc->add_option("--scenario", run_args.scenario_path, "scenario file")
      ->required();
  runc->add_option("--mode", run_args.mode, "proposed|splitmac")
      ->check(CLI::IsMember({"proposed", "splitmac"}));
  runc->add_option("--seed", run_args.seed, "run seed");
  runc->add_option("--out", run_args.out_dir, "output directory");

  auto* sweep = app.add_subcommand("sweep", "run a load sweep across modes");
  sweep->add_option("--scenario", sweep_args.scenario_path, "scenario file")
      ->required();
  sweep
      ->add_option("--mode", sweep_args.modes,
                   "mode(s) to sweep (default both)")
      ->check(CLI::IsMember({"proposed", "splitmac"}));
  sweep->add_option("--loads", sweep_args.loads, "load multipliers")
      ->delimiter(',');
  sweep->add_option("--seed", sweep_args.seed, "base seed");
  sweep->add_option("--out", sweep_args.out_dir, "output directory");

  auto* replay = app.add_subcommand(
      "replay", "re-execute a recorded run and compare digests");
  replay->add_option("--scenario", replay_args.scenario_path, "scenario file")
      ->required();
  replay->add_option("--out", replay_args.out_dir,
                     "directory holding report.json");

  auto* serve = app.add_subcommand(
      "serve", "serve the controller over TCP for external agents");
  serve->add_option("--port", port, "listen port (default 6633)");
  serve->add_option("--aps", serve_aps, "radio count the controller manages");
  serve->add_option("--ues", serve_ues, "terminal count");

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed())
    return cli::cmd_validate(scenario, std::cout, std::cerr);
  if (runc->parsed()) return cli::cmd_run(run_args, std::cout, std::cerr);
  if (sweep->parsed()) return cli::cmd_sweep(sweep_args, std::cout, std::cerr);
  if (replay->parsed())
    return cli::cmd_replay(replay_args, std::cout, std::cerr);
  if (serve->parsed()) return cmd_serve(port, serve_aps, serve_ues);
  return 1;
}
