// SPDX-License-Identifier: Apache-2.0
//
// HTTP/JSON API over an Engine, plus a server-sent event stream.
#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "trendnet/engine.hpp"

namespace httplib {
class Server;
struct Response;
}

namespace trendnet::service {

/// HTTP status for an error code: 400 malformed input, 404 unknown resource,
/// 409 wrong state, 500 otherwise.
int http_status(ErrorCode code) noexcept;

class ApiServer {
 public:
  explicit ApiServer(Engine& engine);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds without serving yet. Port 0 picks a free port; returns the bound port.
  /// Throws Error(IoError) when the address is taken.
  int bind(const std::string& host, int port);
  /// Serves on the bound socket until stop().
  void serve();
  /// bind() + serve() on a background thread.
  int start(const std::string& host, int port);
  void stop();

 private:
  void routes();

  Engine& engine_;
  std::unique_ptr<httplib::Server> http_;
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

}  // namespace trendnet::service
