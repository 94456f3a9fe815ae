// SPDX-License-Identifier: Apache-2.0
#ifndef WLANSDN_CMI_TCP_HPP
#define WLANSDN_CMI_TCP_HPP

#include <atomic>
#include <cstdint>
#include <string>

#include "wlansdn/controller.hpp"

namespace wlansdn::svc {

inline constexpr std::uint16_t kCmiDefaultPort = 6633;

// Serves the controller end of the control interface over TCP: the same
// frames the simulator carries over in-process links, byte for byte. One
// agent connection at a time; a reconnecting agent gets a fresh controller
// and starts from HELLO again. Binds loopback only — this is an inspection
// aid, not a deployment surface.
class CmiTcpServer {
 public:
  explicit CmiTcpServer(ctrl::RanController::Config cfg,
                        std::uint16_t port = kCmiDefaultPort);
  ~CmiTcpServer();
  CmiTcpServer(const CmiTcpServer&) = delete;
  CmiTcpServer& operator=(const CmiTcpServer&) = delete;

  // Opens the listening socket. False means error() has the story and
  // run() must not be called.
  bool bind();
  // The bound port; useful when constructed with port 0.
  std::uint16_t port() const { return port_; }

  // Accept loop; blocks until stop() is called from another thread.
  void run();
  void stop();

  const std::string& error() const { return error_; }
  std::uint64_t sessions_served() const { return sessions_; }

 private:
  void serve_connection(int fd);

  ctrl::RanController::Config cfg_;
  std::uint16_t port_;
  int listen_fd_ = -1;
  int wake_rd_ = -1;  // stop() writes one byte; poll loops watch this end
  int wake_wr_ = -1;
  std::string error_;
  std::atomic<std::uint64_t> sessions_{0};
  std::atomic<bool> stopping_{false};
};

}  // namespace wlansdn::svc

#endif  // WLANSDN_CMI_TCP_HPP
