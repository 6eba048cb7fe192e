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

#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "seriesshap/distributed/node.hpp"

namespace seriesshap::distributed {

struct CapturedFrame {
  std::string node;
  bool outbound = true;  // coordinator -> node
  std::string frame;
};

/// Request/response channel from the coordinator to registered nodes.
/// Implementations must be safe to call from several threads.
class Transport {
 public:
  virtual ~Transport() = default;

  /// Sends one frame (without newline) and returns the reply frame.
  /// Throws kUnreachable when the node cannot be reached.
  std::string exchange(const NodeDescriptor& node, const std::string& frame);

  void set_capture(bool on) { capture_ = on; }
  std::vector<CapturedFrame> captured() const;
  void clear_captured();

 protected:
  virtual std::string send(const NodeDescriptor& node, const std::string& frame) = 0;

 private:
  void record(const std::string& node, bool outbound, const std::string& frame);

  std::atomic<bool> capture_{false};
  mutable std::mutex mu_;
  std::vector<CapturedFrame> frames_;
};

/// Delivers frames to in-process services through the full encode/decode path.
class LoopbackTransport : public Transport {
 public:
  void attach(const NodeService& service) { services_[service.id()] = &service; }
  void detach(const std::string& node_id) { services_.erase(node_id); }

 protected:
  std::string send(const NodeDescriptor& node, const std::string& frame) override;

 private:
  std::map<std::string, const NodeService*> services_;
};

/// Newline-delimited frames over TCP. Connections are pooled per endpoint
/// and reused across requests.
class TcpTransport : public Transport {
 public:
  explicit TcpTransport(int timeout_ms = 10000) : timeout_ms_(timeout_ms) {}
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

 protected:
  std::string send(const NodeDescriptor& node, const std::string& frame) override;

 private:
  int acquire(const std::string& endpoint);
  void release(const std::string& endpoint, int fd);

  int timeout_ms_;
  std::mutex mu_;
  std::map<std::string, std::vector<int>> idle_;
};

/// Serves a NodeService on a TCP port, one thread per connection.
class TcpNodeServer {
 public:
  /// port 0 picks an ephemeral port; see port().
  TcpNodeServer(const NodeService& service, std::uint16_t port = 0, const std::string& host = "127.0.0.1");
  ~TcpNodeServer();
  TcpNodeServer(const TcpNodeServer&) = delete;
  TcpNodeServer& operator=(const TcpNodeServer&) = delete;

  std::uint16_t port() const { return port_; }
  std::string endpoint() const { return host_ + ":" + std::to_string(port_); }

  void start();  // returns immediately
  void wait();   // blocks until stop()
  void stop();

 private:
  void accept_loop();
  void serve_connection(int fd);

  const NodeService& service_;
  std::string host_;
  std::uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
};

/// "host:port" -> (host, port). Throws kInvalidArgument.
std::pair<std::string, std::uint16_t> split_endpoint(const std::string& endpoint);

}  // namespace seriesshap::distributed
