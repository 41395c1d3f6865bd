#include "prefgait/session_log.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>

#include <fcntl.h>
#include <unistd.h>

#include "prefgait/errors.hpp"

namespace prefgait {

double SystemClock::now_s() const {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

std::string iso8601(double epoch_s) {
  const auto total_ms = static_cast<long long>(std::llround(epoch_s * 1000.0));
  const std::time_t secs = static_cast<std::time_t>(total_ms / 1000);
  const int ms = static_cast<int>(total_ms % 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
  return buf;
}

double parse_iso8601(const std::string& text) {
  std::tm tm{};
  int ms = 0;
  char z = 0;
  const int n = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3d%c", &tm.tm_year,
                            &tm.tm_mon, &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec,
                            &ms, &z);
  if (n != 8 || z != 'Z') {
    throw ValidationError("malformed UTC timestamp '" + text + "'", {"t"});
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  return static_cast<double>(timegm(&tm)) + ms / 1000.0;
}

std::string to_string(SessionMode m) { return m == SessionMode::kLive ? "live" : "simulated"; }

SessionMode session_mode_from_string(const std::string& s) {
  if (s == "live") return SessionMode::kLive;
  if (s == "simulated") return SessionMode::kSimulated;
  throw ValidationError("mode must be 'live' or 'simulated', got '" + s + "'", {"mode"});
}

nlohmann::json LogEvent::to_json() const {
  return nlohmann::json{{"event", event}, {"t", t}, {"payload", payload}};
}

LogEvent LogEvent::from_json(const nlohmann::json& j) {
  LogEvent e;
  e.event = j.at("event").get<std::string>();
  e.t = j.at("t").get<std::string>();
  e.payload = j.value("payload", nlohmann::json::object());
  return e;
}

LogEvent make_header_event(const LogHeader& h) {
  LogEvent e;
  e.event = "header";
  e.t = h.created;
  e.payload = {{"session_id", h.session_id},
               {"mode", to_string(h.mode)},
               {"config", h.config},
               {"format", 1}};
  if (h.oracle) e.payload["oracle"] = *h.oracle;
  return e;
}

LogHeader parse_header(const LogEvent& e) {
  if (e.event != "header") throw ValidationError("first log line must be the header", {"header"});
  LogHeader h;
  h.session_id = e.payload.at("session_id").get<std::string>();
  h.mode = session_mode_from_string(e.payload.at("mode").get<std::string>());
  h.config = e.payload.at("config").get<SessionConfig>();
  if (const auto it = e.payload.find("oracle"); it != e.payload.end()) {
    h.oracle = it->get<OracleSpec>();
  }
  h.created = e.t;
  return h;
}

LogEvent batch_created_event(const SessionState& s, const std::string& t) {
  return {"batch_created", t, {{"batch", s.batch}, {"dummy_query", s.dummy_query}}};
}

LogEvent query_presented_event(const SessionState& s, const std::string& t) {
  return {"query_presented", t,
          {{"iteration", s.iteration()}, {"query", s.current_query}}};
}

LogEvent choice_event(const Choice& c, std::size_t iteration) {
  return {"choice", c.timestamp,
          {{"iteration", iteration},
           {"query", c.query},
           {"selected", to_string(c.selected)},
           {"responder", to_string(c.responder)}}};
}

LogEvent validation_presented_event(const SessionState& s, const std::string& t) {
  return {"query_presented", t,
          {{"validation_index", s.validation_cursor},
           {"query", s.validation.at(s.validation_cursor).query}}};
}

LogEvent belief_snapshot_event(const SessionState& s, const std::string& t) {
  return {"belief_snapshot", t,
          {{"iteration", s.iteration()},
           {"belief", s.belief},
           {"summary", posterior_summary(s.belief, s.batch, s.config.ranges)}}};
}

LogEvent finished_event(const SessionState& s, const std::string& t) {
  nlohmann::json p{{"iteration", s.iteration()}, {"weights_mean", s.weight_history.back()}};
  p["final_index"] = s.final_index ? nlohmann::json(*s.final_index) : nlohmann::json(nullptr);
  if (s.final_index) p["final_profile"] = s.final_profile();
  return {"finished", t, p};
}

LogEvent validation_result_event(const ValidationItem& item, std::size_t index,
                                 const std::string& t) {
  nlohmann::json p = item;
  p["index"] = index;
  if (item.kept) {
    const Option other = item.preferred_option == Option::kA ? Option::kB : Option::kA;
    p["selected"] = to_string(*item.kept ? item.preferred_option : other);
  }
  return {"validation_result", t, p};
}

const LogHeader SessionLog::header() const {
  if (events.empty()) throw ValidationError("session log is empty", {"log"});
  return parse_header(events.front());
}

SessionLog SessionLog::read(std::istream& in) {
  SessionLog log;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      log.events.push_back(LogEvent::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("invalid log line: ") + e.what(), row, 0);
    }
  }
  if (log.events.empty()) throw ValidationError("session log is empty", {"log"});
  return log;
}

SessionLog SessionLog::read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open session log " + path.string());
  return read(in);
}

void SessionLog::write(std::ostream& out) const {
  for (const auto& e : events) out << e.to_json().dump() << '\n';
}

LogWriter::LogWriter(const std::filesystem::path& path) : path_(path) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  file_ = std::fopen(path_.c_str(), "ab");
  if (!file_) throw Error("cannot open log file " + path_.string() + " for append");
}

LogWriter::~LogWriter() {
  if (file_) std::fclose(file_);
}

void LogWriter::append(const LogEvent& event) {
  const std::string line = event.to_json().dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() ||
      std::fflush(file_) != 0 || ::fsync(::fileno(file_)) != 0) {
    throw Error("failed to persist log line to " + path_.string());
  }
}

std::vector<Choice> recorded_choices(const SessionLog& log) {
  std::vector<Choice> out;
  for (const auto& e : log.events) {
    if (e.event != "choice") continue;
    Choice c;
    c.query = e.payload.at("query").get<Query>();
    c.selected = option_from_string(e.payload.at("selected").get<std::string>());
    c.responder = responder_from_string(e.payload.value("responder", "human"));
    c.timestamp = e.t;
    out.push_back(std::move(c));
  }
  return out;
}

SessionState replay(const SessionLog& log) {
  const LogHeader header = log.header();
  SessionState state = present_next_query(initialize(header.config));
  for (std::size_t i = 1; i < log.events.size(); ++i) {
    const auto& e = log.events[i];
    if (e.event == "choice") {
      const auto recorded = e.payload.at("query").get<Query>();
      if (!(recorded == state.current_query)) {
        throw ValidationError("log line " + std::to_string(i + 1) +
                                  ": recorded query differs from the replayed engine",
                              {"query"});
      }
      state = submit_choice(std::move(state),
                            option_from_string(e.payload.at("selected").get<std::string>()),
                            e.t, responder_from_string(e.payload.value("responder", "human")));
    } else if (e.event == "query_presented" && e.payload.contains("validation_index")) {
      if (state.phase == SessionPhase::kFinished) state = begin_validation(std::move(state));
    } else if (e.event == "validation_result") {
      if (state.phase == SessionPhase::kFinished) state = begin_validation(std::move(state));
      const auto selected = e.payload.find("selected");
      if (selected == e.payload.end()) continue;
      state = submit_validation_choice(std::move(state),
                                       option_from_string(selected->get<std::string>()));
    }
  }
  return state;
}

}  // namespace prefgait
