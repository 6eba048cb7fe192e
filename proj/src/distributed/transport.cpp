// Copyright 2026 The seriesshap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "seriesshap/distributed/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace seriesshap::distributed {

std::string Transport::exchange(const NodeDescriptor& node, const std::string& frame) {
  record(node.id, true, frame);
  std::string reply = send(node, frame);
  record(node.id, false, reply);
  return reply;
}

void Transport::record(const std::string& node, bool outbound, const std::string& frame) {
  if (!capture_) return;
  std::lock_guard<std::mutex> lock(mu_);
  frames_.push_back(CapturedFrame{node, outbound, frame});
}

std::vector<CapturedFrame> Transport::captured() const {
  std::lock_guard<std::mutex> lock(mu_);
  return frames_;
}

void Transport::clear_captured() {
  std::lock_guard<std::mutex> lock(mu_);
  frames_.clear();
}

std::string LoopbackTransport::send(const NodeDescriptor& node, const std::string& frame) {
  auto it = services_.find(node.id);
  if (it == services_.end()) fail(ErrorCode::kUnreachable, "node '" + node.id + "' is not attached");
  return it->second->handle_frame(frame);
}

std::pair<std::string, std::uint16_t> split_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size()) {
    fail(ErrorCode::kInvalidArgument, "endpoint '" + endpoint + "' is not host:port");
  }
  const std::string port = endpoint.substr(colon + 1);
  char* end = nullptr;
  const long p = std::strtol(port.c_str(), &end, 10);
  if (*end != '\0' || p <= 0 || p > 65535) fail(ErrorCode::kInvalidArgument, "bad port in '" + endpoint + "'");
  return {endpoint.substr(0, colon), static_cast<std::uint16_t>(p)};
}

namespace {

bool write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

// Reads one '\n'-terminated line. `buffer` keeps bytes past the newline.
// Returns false on EOF, error or timeout.
bool read_line(int fd, std::string& buffer, std::string& line, int timeout_ms, const std::atomic<bool>* stop = nullptr) {
  for (;;) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return true;
    }
    pollfd pfd{fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, stop ? 100 : timeout_ms);
    if (ready < 0 && errno == EINTR) continue;
    if (ready < 0) return false;
    if (ready == 0) {
      if (stop && !*stop) continue;
      return false;
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

int connect_to(const std::string& endpoint) {
  const auto [host, port] = split_endpoint(endpoint);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0) {
    fail(ErrorCode::kUnreachable, "cannot resolve " + endpoint);
  }
  int fd = -1;
  for (addrinfo* a = res; a; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) fail(ErrorCode::kUnreachable, "cannot connect to " + endpoint + ": " + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

}  // namespace

TcpTransport::~TcpTransport() {
  for (auto& [_, fds] : idle_) {
    for (int fd : fds) ::close(fd);
  }
}

int TcpTransport::acquire(const std::string& endpoint) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto& pool = idle_[endpoint];
    if (!pool.empty()) {
      const int fd = pool.back();
      pool.pop_back();
      return fd;
    }
  }
  return connect_to(endpoint);
}

void TcpTransport::release(const std::string& endpoint, int fd) {
  std::lock_guard<std::mutex> lock(mu_);
  idle_[endpoint].push_back(fd);
}

std::string TcpTransport::send(const NodeDescriptor& node, const std::string& frame) {
  if (node.endpoint.empty()) fail(ErrorCode::kUnreachable, "node '" + node.id + "' has no endpoint");
  // A pooled connection may have been closed by the peer; retry once on a
  // fresh one before giving up.
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = acquire(node.endpoint);
    std::string buffer, line;
    if (write_all(fd, frame + "\n") && read_line(fd, buffer, line, timeout_ms_)) {
      release(node.endpoint, fd);
      return line;
    }
    ::close(fd);
  }
  fail(ErrorCode::kUnreachable, "node '" + node.id + "' at " + node.endpoint + " did not answer");
}

TcpNodeServer::TcpNodeServer(const NodeService& service, std::uint16_t port, const std::string& host)
    : service_(service), host_(host) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) fail(ErrorCode::kIo, std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    fail(ErrorCode::kInvalidArgument, "bind address '" + host + "' is not IPv4");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    fail(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpNodeServer::~TcpNodeServer() { stop(); }

void TcpNodeServer::start() {
  if (acceptor_.joinable()) return;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpNodeServer::wait() {
  if (acceptor_.joinable()) acceptor_.join();
}

void TcpNodeServer::stop() {
  stopping_ = true;
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(mu_);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

void TcpNodeServer::accept_loop() {
  while (!stopping_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard<std::mutex> lock(mu_);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void TcpNodeServer::serve_connection(int fd) {
  std::string buffer, line;
  while (read_line(fd, buffer, line, 0, &stopping_)) {
    if (stopping_) break;
    if (!write_all(fd, service_.handle_frame(line) + "\n")) break;
  }
  ::close(fd);
}

}  // namespace seriesshap::distributed
