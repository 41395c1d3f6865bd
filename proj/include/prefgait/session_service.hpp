#pragma once

// Hosts concurrent preference sessions: creation, querying, choices,
// event streaming, trace ingestion and reports. SessionManager is the
// transport-independent core; HttpService exposes it over HTTP with a
// server-sent-events stream.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefgait/report.hpp"
#include "prefgait/session_log.hpp"

namespace httplib {
class Server;
}

namespace prefgait {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "prefgait-data";

  /// Reads an optional JSON config file ({host, port, data_dir}) then applies
  /// PREFGAIT_PORT and PREFGAIT_DATA_DIR overrides.
  static ServiceConfig load(const std::optional<std::filesystem::path>& file);
};

class SessionManager {
 public:
  explicit SessionManager(std::filesystem::path data_dir,
                          std::shared_ptr<const Clock> clock = std::make_shared<SystemClock>());
  ~SessionManager();

  /// Body: {"config": {...}, "mode": "live"|"simulated", "oracle": {...},
  /// "validate": bool}. Simulated sessions run to completion before return.
  std::string create_session(const nlohmann::json& request);

  nlohmann::json status(const std::string& id) const;
  /// Both options with feature vectors, 1000-point curves and the timing
  /// contract. Throws StateError outside awaiting_choice / validating.
  nlohmann::json current_query(const std::string& id) const;
  /// Persists the choice and its consequences before returning.
  nlohmann::json post_choice(const std::string& id, Option chosen);
  nlohmann::json begin_validation(const std::string& id);
  nlohmann::json ingest_trace(const std::string& id, std::size_t profile_index,
                              const std::string& csv);
  nlohmann::json report(const std::string& id) const;

  /// Events with index >= offset (index 0 is the log header).
  std::vector<LogEvent> events_from(const std::string& id, std::size_t offset) const;
  /// Blocks until more than `offset` events exist, the session can produce no
  /// more events, the manager shuts down, or the timeout expires. Returns
  /// the current event count.
  std::size_t wait_for_events(const std::string& id, std::size_t offset,
                              std::chrono::milliseconds timeout) const;
  /// True when the session cannot emit further events without a new command
  /// (finished, or validation complete).
  bool quiescent(const std::string& id) const;

  /// Reloads every session log under the data directory by replay.
  std::size_t recover();
  void shutdown();
  bool shutting_down() const { return stopping_; }

  std::vector<std::string> session_ids() const;
  std::filesystem::path log_path(const std::string& id) const;
  /// Engine state snapshot (tests and diagnostics).
  SessionState state(const std::string& id) const;

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;
  std::string new_id();
  void commit(Session& s, SessionState next, std::vector<LogEvent> events);

  std::filesystem::path data_dir_;
  std::shared_ptr<const Clock> clock_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t counter_ = 0;
  std::atomic<bool> stopping_{false};
};

class HttpService {
 public:
  explicit HttpService(std::shared_ptr<SessionManager> manager);
  ~HttpService();

  /// Binds and serves until stop(); returns false when binding fails.
  bool listen(const std::string& host, int port);
  /// Binds without serving; false when the address is unavailable.
  bool bind(const std::string& host, int port);
  /// Binds to an ephemeral port; returns it, or -1 on failure.
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  bool running() const;

 private:
  void install_routes();

  std::shared_ptr<SessionManager> manager_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace prefgait
