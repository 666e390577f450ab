#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "cpsec/service/api.hpp"

namespace cpsec::service {

/// HTTP and WebSocket on one port. Requests are handled on a worker pool;
/// /api/sessions/{sid}/events upgrades to a WebSocket that receives
/// {"session": sid, "invalidated": [...]} after each command.
class Server {
 public:
  /// Binds immediately; port 0 picks a free port. Installs itself as the
  /// api's listener.
  Server(Api& api, const std::string& address, std::uint16_t port, unsigned threads = 4);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const;

  /// Serves on background threads until stop().
  void start();
  /// Serves on the calling thread (plus workers) until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cpsec::service
