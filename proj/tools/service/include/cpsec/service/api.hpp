#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include "cpsec/session.hpp"

namespace cpsec::service {

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Transport-independent request handling for the session API. All ids on
/// the wire are native string ids.
///
///   GET    /api/sessions
///   POST   /api/sessions                       {"bundle": path}
///   DELETE /api/sessions/{sid}
///   GET    /api/sessions/{sid}/{resource}      topology spec matches surface av-graph av-view
///                                              positions bucket selection edit-log projection
///                                              chains?target=&max_depth=&max_chains=&timeout_ms=
///                                              trace?origin=  entry?id=  report?format=
///                                              bucket-export?format=
///   POST   /api/sessions/{sid}/commands        {"op": ...}
///   POST   /api/sessions/{sid}/save            {"path": optional}
///
/// Errors are {"error":{"type","message","diagnostics"?}} with 400 (malformed),
/// 404 (unknown id or route), 405, 409 (invalid operation), 422 (validation)
/// or 500 (I/O).
class Api {
 public:
  /// Called after every state-changing command with the invalidated
  /// resource names. May run on any thread.
  using Listener = std::function<void(const std::string& session, const Invalidation& invalidated)>;

  void set_listener(Listener listener);

  Response handle(std::string_view method, std::string_view target, std::string_view body,
                  std::stop_token stop = {});

  /// Registers an already constructed session; returns its id.
  std::string add_session(std::unique_ptr<Session> session, std::filesystem::path bundle = {});
  bool has_session(const std::string& id) const;

 private:
  struct Entry {
    std::shared_ptr<Session> session;
    std::filesystem::path bundle;
  };

  Entry find(const std::string& id) const;
  Response route(std::string_view method, std::string_view target, std::string_view body, std::stop_token stop);
  Response get_resource(const Entry& entry, std::string_view resource,
                        const std::map<std::string, std::string>& query, std::stop_token stop);
  Response post_command(const std::string& id, const Entry& entry, std::string_view body);
  void notify(const std::string& id, const Invalidation& invalidated);

  mutable std::mutex mutex_;
  std::map<std::string, Entry> sessions_;
  std::uint64_t next_id_ = 1;
  Listener listener_;
};

/// Splits "a%20b?x=1&y=2" into a decoded path and decoded query parameters.
std::pair<std::string, std::map<std::string, std::string>> split_target(std::string_view target);

}  // namespace cpsec::service
