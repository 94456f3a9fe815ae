// SPDX-License-Identifier: Apache-2.0
#include "wlansdn/cmi_tcp.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <queue>
#include <utility>
#include <vector>

namespace wlansdn::svc {

namespace {

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

bool write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    ssize_t w = ::write(fd, data, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

// Wall-clock timer wheel for one connection. The controller only needs
// set_clock/set_timer; everything else is poll bookkeeping.
struct TimerHeap {
  using Entry = std::pair<std::int64_t, std::uint64_t>;  // deadline, seq
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> order;
  std::vector<std::function<void()>> fns;

  void arm(std::int64_t deadline_us, std::function<void()> fn) {
    order.emplace(deadline_us, fns.size());
    fns.push_back(std::move(fn));
  }
  // Fires everything due at `now_us`; returns µs until the next deadline
  // or -1 when nothing is armed.
  std::int64_t fire_due(std::int64_t now_us) {
    while (!order.empty() && order.top().first <= now_us) {
      auto [deadline, seq] = order.top();
      order.pop();
      std::function<void()> fn = std::move(fns[seq]);
      if (fn) fn();
    }
    if (order.empty()) return -1;
    return order.top().first - now_us;
  }
};

}  // namespace

CmiTcpServer::CmiTcpServer(ctrl::RanController::Config cfg, std::uint16_t port)
    : cfg_(std::move(cfg)), port_(port) {}

CmiTcpServer::~CmiTcpServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
  if (wake_rd_ >= 0) ::close(wake_rd_);
  if (wake_wr_ >= 0) ::close(wake_wr_);
}

bool CmiTcpServer::bind() {
  int pipefd[2];
  if (::pipe(pipefd) != 0) {
    error_ = errno_text("pipe");
    return false;
  }
  wake_rd_ = pipefd[0];
  wake_wr_ = pipefd[1];

  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) {
    error_ = errno_text("socket");
    return false;
  }
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port_);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) !=
      0) {
    error_ = errno_text("bind");
    return false;
  }
  if (::listen(listen_fd_, 1) != 0) {
    error_ = errno_text("listen");
    return false;
  }
  socklen_t len = sizeof(addr);
  if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len) ==
      0) {
    port_ = ntohs(addr.sin_port);
  }
  return true;
}

void CmiTcpServer::run() {
  while (!stopping_.load()) {
    pollfd fds[2] = {{listen_fd_, POLLIN, 0}, {wake_rd_, POLLIN, 0}};
    int rc = ::poll(fds, 2, -1);
    if (rc < 0) {
      if (errno == EINTR) continue;
      error_ = errno_text("poll");
      return;
    }
    if (fds[1].revents) return;
    if (!(fds[0].revents & POLLIN)) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    serve_connection(fd);
    ::close(fd);
    sessions_ += 1;
  }
}

void CmiTcpServer::stop() {
  stopping_.store(true);
  std::uint8_t b = 1;
  (void)!::write(wake_wr_, &b, 1);
}

void CmiTcpServer::serve_connection(int fd) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto now_us = [&] {
    return std::chrono::duration_cast<std::chrono::microseconds>(clock::now() -
                                                                 t0)
        .count();
  };

  TimerHeap timers;
  bool dead = false;

  ctrl::RanController ctl(cfg_);
  ctl.set_clock(now_us);
  ctl.set_timer([&](std::int64_t delay_us, std::function<void()> fn) {
    timers.arm(now_us() + delay_us, std::move(fn));
  });
  ctl.set_send([&](std::vector<std::uint8_t>&& bytes) {
    if (!dead && !write_all(fd, bytes.data(), bytes.size())) dead = true;
  });
  ctl.start();

  std::uint8_t buf[65536];
  while (!dead && !stopping_.load()) {
    std::int64_t next = timers.fire_due(now_us());
    int timeout_ms = next < 0 ? 100 : static_cast<int>((next + 999) / 1000);
    if (timeout_ms > 100) timeout_ms = 100;
    pollfd fds[2] = {{fd, POLLIN, 0}, {wake_rd_, POLLIN, 0}};
    int rc = ::poll(fds, 2, timeout_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      return;
    }
    if (fds[1].revents) return;
    if (!(fds[0].revents & POLLIN)) continue;
    ssize_t n = ::read(fd, buf, sizeof(buf));
    if (n <= 0) return;
    try {
      ctl.on_bytes({buf, static_cast<std::size_t>(n)});
    } catch (const std::exception&) {
      // A peer that breaks the handshake loses the connection, nothing more.
      return;
    }
  }
}

}  // namespace wlansdn::svc
