#pragma once

// Append-only JSONL session record and deterministic replay.
//
// Line 0 is a header carrying the session id, mode, full config (with seeds)
// and the oracle spec for simulated sessions. Every following line is
// {"event": ..., "t": ISO-8601 UTC, "payload": {...}} with event one of
// batch_created, query_presented, choice, belief_snapshot, finished,
// validation_result, trace_ingested.

#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefgait/oracle.hpp"
#include "prefgait/query_engine.hpp"

namespace prefgait {

/// Seconds since the Unix epoch, UTC.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now_s() const = 0;
};

class SystemClock final : public Clock {
 public:
  double now_s() const override;
};

/// Manually advanced clock; simulated sessions and tests use it.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(double start_s = 0.0) : now_(start_s) {}
  double now_s() const override { return now_; }
  void advance(double seconds) { now_ += seconds; }
  void set(double seconds) { now_ = seconds; }

 private:
  double now_;
};

/// "YYYY-MM-DDTHH:MM:SS.mmmZ"
std::string iso8601(double epoch_s);
/// Inverse of iso8601; throws ValidationError on malformed input.
double parse_iso8601(const std::string& text);

enum class SessionMode { kLive, kSimulated };
std::string to_string(SessionMode m);
SessionMode session_mode_from_string(const std::string& s);

struct LogEvent {
  std::string event;
  std::string t;
  nlohmann::json payload;

  nlohmann::json to_json() const;
  static LogEvent from_json(const nlohmann::json& j);
  bool operator==(const LogEvent&) const = default;
};

struct LogHeader {
  std::string session_id;
  SessionMode mode = SessionMode::kLive;
  SessionConfig config;
  std::optional<OracleSpec> oracle;
  std::string created;
};

LogEvent make_header_event(const LogHeader& header);
LogHeader parse_header(const LogEvent& event);

// Builders for the events emitted at each state transition.
LogEvent batch_created_event(const SessionState& s, const std::string& t);
LogEvent query_presented_event(const SessionState& s, const std::string& t);
LogEvent choice_event(const Choice& c, std::size_t iteration);
LogEvent belief_snapshot_event(const SessionState& s, const std::string& t);
LogEvent finished_event(const SessionState& s, const std::string& t);
/// query_presented for the validation item at the cursor.
LogEvent validation_presented_event(const SessionState& s, const std::string& t);
LogEvent validation_result_event(const ValidationItem& item, std::size_t index,
                                 const std::string& t);

struct SessionLog {
  std::vector<LogEvent> events;  // events[0] is the header

  const LogHeader header() const;
  /// Parses JSONL; throws ParseError naming the bad line.
  static SessionLog read(std::istream& in);
  static SessionLog read_file(const std::filesystem::path& path);
  void write(std::ostream& out) const;
};

/// Append-only writer: every append is flushed and synced to disk before it
/// returns.
class LogWriter {
 public:
  explicit LogWriter(const std::filesystem::path& path);
  ~LogWriter();
  LogWriter(const LogWriter&) = delete;
  LogWriter& operator=(const LogWriter&) = delete;

  void append(const LogEvent& event);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
};

/// Rebuilds the session state by re-running the engine over the recorded
/// choices. Throws ValidationError if the log is inconsistent with the
/// engine (e.g. a recorded query differs from the one the engine presents).
SessionState replay(const SessionLog& log);

/// Choice history recorded in the log (no engine re-run).
std::vector<Choice> recorded_choices(const SessionLog& log);

}  // namespace prefgait
