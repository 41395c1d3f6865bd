#include "prefgait/session_service.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <regex>

#include <httplib.h>

#include "prefgait/errors.hpp"
#include "prefgait/gait.hpp"
#include "prefgait/simulation.hpp"

namespace prefgait {

ServiceConfig ServiceConfig::load(const std::optional<std::filesystem::path>& file) {
  ServiceConfig c;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw NotFoundError("cannot open service config " + file->string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("service config: ") + e.what(), {"config"});
    }
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.data_dir = j.value("data_dir", c.data_dir.string());
  }
  if (const char* port = std::getenv("PREFGAIT_PORT"); port && *port) {
    try {
      c.port = std::stoi(port);
    } catch (const std::exception&) {
      throw ValidationError(std::string("PREFGAIT_PORT is not a number: ") + port, {"port"});
    }
  }
  if (const char* dir = std::getenv("PREFGAIT_DATA_DIR"); dir && *dir) c.data_dir = dir;
  if (c.port < 0 || c.port > 65535) throw ValidationError("port out of range", {"port"});
  return c;
}

struct SessionManager::Session {
  std::string id;
  SessionMode mode = SessionMode::kLive;
  mutable std::mutex mutex;
  mutable std::condition_variable cv;
  SessionState state;
  std::vector<LogEvent> events;
  std::unique_ptr<LogWriter> writer;
  double presented_at = 0.0;
  ProfileMetrics metrics;
};

SessionManager::SessionManager(std::filesystem::path data_dir,
                               std::shared_ptr<const Clock> clock)
    : data_dir_(std::move(data_dir)), clock_(std::move(clock)) {
  std::filesystem::create_directories(data_dir_);
}

SessionManager::~SessionManager() { shutdown(); }

void SessionManager::shutdown() {
  stopping_ = true;
  std::lock_guard lock(mutex_);
  for (auto& [id, s] : sessions_) s->cv.notify_all();
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

std::vector<std::string> SessionManager::session_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

std::filesystem::path SessionManager::log_path(const std::string& id) const {
  return data_dir_ / id / "session.jsonl";
}

std::string SessionManager::new_id() {
  static thread_local std::mt19937_64 rng(std::random_device{}());
  std::lock_guard lock(mutex_);
  for (;;) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%04zu-%08llx", ++counter_,
                  static_cast<unsigned long long>(rng() & 0xffffffffULL));
    if (!sessions_.contains(buf) && !std::filesystem::exists(data_dir_ / buf)) return buf;
  }
}

void SessionManager::commit(Session& s, SessionState next, std::vector<LogEvent> events) {
  // Write-ahead: nothing becomes visible before it is on disk.
  for (const auto& e : events) s.writer->append(e);
  s.state = std::move(next);
  for (auto& e : events) s.events.push_back(std::move(e));
  s.cv.notify_all();
}

std::string SessionManager::create_session(const nlohmann::json& request) {
  if (!request.is_object()) throw ValidationError("request body must be a JSON object", {"body"});
  const SessionMode mode =
      session_mode_from_string(request.value("mode", std::string("live")));
  SessionConfig config;
  if (const auto it = request.find("config"); it != request.end()) {
    config = it->get<SessionConfig>();
  } else {
    config.validate();
  }
  std::optional<OracleSpec> oracle;
  if (const auto it = request.find("oracle"); it != request.end() && !it->is_null()) {
    oracle = it->get<OracleSpec>();
  }
  if (mode == SessionMode::kSimulated && !oracle) {
    throw ValidationError("simulated sessions require an oracle spec", {"oracle"});
  }
  if (mode == SessionMode::kLive && oracle) {
    throw ValidationError("live sessions must not carry an oracle spec", {"oracle"});
  }
  const bool run_validation = request.value("validate", false);

  auto session = std::make_shared<Session>();
  session->id = new_id();
  session->mode = mode;
  session->writer = std::make_unique<LogWriter>(log_path(session->id));

  if (mode == SessionMode::kSimulated) {
    auto result = run_simulated_session(session->id, config, *oracle, run_validation,
                                        session->writer.get());
    session->state = std::move(result.state);
    session->events = std::move(result.log.events);
  } else {
    const std::string t = iso8601(clock_->now_s());
    LogHeader header{session->id, mode, config, std::nullopt, t};
    SessionState state = initialize(config);
    std::vector<LogEvent> events{make_header_event(header), batch_created_event(state, t)};
    state = present_next_query(std::move(state));
    events.push_back(query_presented_event(state, t));
    session->presented_at = clock_->now_s();
    commit(*session, std::move(state), std::move(events));
  }

  std::lock_guard lock(mutex_);
  sessions_[session->id] = session;
  return session->id;
}

namespace {

nlohmann::json option_payload(const TorqueProfileFeatures& f, std::size_t index, int resolution) {
  const auto curve = interpolate(f, resolution);
  nlohmann::json j{{"features", f},
                   {"curve", {{"phase", curve.phase}, {"torque_nm", curve.torque_nm}}}};
  j["batch_index"] = index == kNoIndex ? nlohmann::json(nullptr) : nlohmann::json(index);
  return j;
}

nlohmann::json status_json(const SessionState& s, const std::string& id, SessionMode mode) {
  nlohmann::json j{{"id", id},
                   {"mode", to_string(mode)},
                   {"phase", to_string(s.phase)},
                   {"iteration", s.iteration()},
                   {"comparisons", s.config.comparisons},
                   {"finished", s.phase == SessionPhase::kFinished ||
                                    s.phase == SessionPhase::kValidating}};
  j["summary"] = posterior_summary(s.belief, s.batch, s.config.ranges);
  if (s.final_index) {
    j["final_index"] = *s.final_index;
    j["final_profile"] = s.final_profile();
  }
  if (s.phase == SessionPhase::kValidating) {
    j["validation"] = {{"answered", s.validation_cursor},
                       {"total", s.validation.size()},
                       {"complete", validation_complete(s)}};
  }
  return j;
}

}  // namespace

nlohmann::json SessionManager::status(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return status_json(s->state, s->id, s->mode);
}

SessionState SessionManager::state(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->state;
}

nlohmann::json SessionManager::current_query(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  const auto& st = s->state;
  const Query* q = nullptr;
  std::string kind;
  if (st.phase == SessionPhase::kAwaitingChoice) {
    q = &st.current_query;
    kind = "comparison";
  } else if (st.phase == SessionPhase::kValidating && !validation_complete(st)) {
    q = &current_validation_item(st).query;
    kind = "validation";
  } else {
    throw StateError("no query pending; session is " + to_string(st.phase));
  }
  const double allowed = s->presented_at + st.config.query_duration_s();
  nlohmann::json j{{"session_id", s->id},
                   {"kind", kind},
                   {"iteration", st.iteration() + 1},
                   {"comparisons", st.config.comparisons},
                   {"A", option_payload(q->a, q->index_a, st.config.resolution)},
                   {"B", option_payload(q->b, q->index_b, st.config.resolution)}};
  j["timing"] = {{"exposure_s", st.config.exposure_s},
                 {"washout_s", st.config.washout_s},
                 {"order", {"A", "washout", "B"}},
                 {"presented_at", iso8601(s->presented_at)},
                 {"choice_allowed_at", iso8601(allowed)},
                 {"enforced", s->mode == SessionMode::kLive}};
  if (kind == "validation") j["validation_index"] = st.validation_cursor;
  return j;
}

nlohmann::json SessionManager::post_choice(const std::string& id, Option chosen) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  const auto& st = s->state;
  if (st.phase != SessionPhase::kAwaitingChoice &&
      !(st.phase == SessionPhase::kValidating && !validation_complete(st))) {
    throw StateError("no query awaiting a choice; session is " + to_string(st.phase));
  }
  const double now = clock_->now_s();
  if (s->mode == SessionMode::kLive) {
    const double allowed = s->presented_at + st.config.query_duration_s();
    if (now < allowed) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "choice rejected: %.1f s of exposure/washout remaining",
                    allowed - now);
      throw TimingError(buf);
    }
  }
  const std::string t = iso8601(now);
  std::vector<LogEvent> events;
  SessionState next;
  if (st.phase == SessionPhase::kValidating) {
    const std::size_t index = st.validation_cursor;
    next = submit_validation_choice(st, chosen);
    events.push_back(validation_result_event(next.validation[index], index, t));
    if (!validation_complete(next)) {
      events.push_back(validation_presented_event(next, t));
    }
  } else {
    next = submit_choice(st, chosen, t, Responder::kHuman);
    events.push_back(choice_event(next.history.back(), next.iteration()));
    events.push_back(belief_snapshot_event(next, t));
    if (next.phase == SessionPhase::kFinished) {
      events.push_back(finished_event(next, t));
    } else {
      events.push_back(query_presented_event(next, t));
    }
  }
  commit(*s, std::move(next), std::move(events));
  s->presented_at = now;
  return status_json(s->state, s->id, s->mode);
}

nlohmann::json SessionManager::begin_validation(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  SessionState next = prefgait::begin_validation(s->state);
  const double now = clock_->now_s();
  const std::string t = iso8601(now);
  std::vector<LogEvent> events;
  if (!validation_complete(next)) {
    events.push_back(validation_presented_event(next, t));
  }
  commit(*s, std::move(next), std::move(events));
  s->presented_at = now;
  return status_json(s->state, s->id, s->mode);
}

nlohmann::json SessionManager::ingest_trace(const std::string& id, std::size_t profile_index,
                                            const std::string& csv) {
  auto s = find(id);
  const GaitTrace trace = parse_gait_csv_string(csv);
  const TraceMetrics metrics = trace_metrics(trace);
  std::lock_guard lock(s->mutex);
  if (profile_index >= s->state.batch.size()) {
    throw ValidationError("profile index " + std::to_string(profile_index) +
                              " outside batch of " + std::to_string(s->state.batch.size()),
                          {"profile_idx"});
  }
  const auto dir = data_dir_ / s->id / "traces";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / (std::to_string(profile_index) + ".csv"), std::ios::trunc);
    out << csv;
    if (!out) throw Error("failed to store trace for profile " + std::to_string(profile_index));
  }
  const bool replaced = s->metrics.contains(profile_index);
  nlohmann::json record{{"profile_index", profile_index},
                        {"replaced", replaced},
                        {"metrics", metrics}};
  commit(*s, s->state, {{"trace_ingested", iso8601(clock_->now_s()), record}});
  s->metrics[profile_index] = metrics;
  return record;
}

nlohmann::json SessionManager::report(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  SessionLog log{s->events};
  return session_report(log, s->metrics);
}

std::vector<LogEvent> SessionManager::events_from(const std::string& id,
                                                  std::size_t offset) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (offset >= s->events.size()) return {};
  return {s->events.begin() + static_cast<std::ptrdiff_t>(offset), s->events.end()};
}

bool SessionManager::quiescent(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->state.phase == SessionPhase::kFinished ||
         (s->state.phase == SessionPhase::kValidating && validation_complete(s->state));
}

std::size_t SessionManager::wait_for_events(const std::string& id, std::size_t offset,
                                            std::chrono::milliseconds timeout) const {
  auto s = find(id);
  std::unique_lock lock(s->mutex);
  s->cv.wait_for(lock, timeout, [&] { return s->events.size() > offset || stopping_; });
  return s->events.size();
}

std::size_t SessionManager::recover() {
  std::size_t loaded = 0;
  if (!std::filesystem::is_directory(data_dir_)) return 0;
  for (const auto& entry : std::filesystem::directory_iterator(data_dir_)) {
    const auto path = entry.path() / "session.jsonl";
    if (!entry.is_directory() || !std::filesystem::exists(path)) continue;
    const std::string id = entry.path().filename().string();
    {
      std::lock_guard lock(mutex_);
      if (sessions_.contains(id)) continue;
    }
    SessionLog log = SessionLog::read_file(path);
    const LogHeader header = log.header();
    auto session = std::make_shared<Session>();
    session->id = id;
    session->mode = header.mode;
    session->state = replay(log);
    session->events = std::move(log.events);
    session->writer = std::make_unique<LogWriter>(path);

    // A crash between persisting a choice and its follow-up lines leaves the
    // log ending in a choice; regenerate the follow-ups from the replay.
    const auto& st = session->state;
    if (session->events.back().event == "choice") {
      const std::string t = session->events.back().t;
      std::vector<LogEvent> tail{belief_snapshot_event(st, t)};
      tail.push_back(st.phase == SessionPhase::kFinished ? finished_event(st, t)
                                                         : query_presented_event(st, t));
      commit(*session, session->state, std::move(tail));
    } else if (session->events.back().event == "validation_result" &&
               !validation_complete(st)) {
      commit(*session, session->state,
             {validation_presented_event(st, session->events.back().t)});
    }
    for (auto it = session->events.rbegin(); it != session->events.rend(); ++it) {
      if (it->event == "query_presented" || it->event == "batch_created") {
        session->presented_at = parse_iso8601(it->t);
        break;
      }
    }
    const auto traces = entry.path() / "traces";
    if (std::filesystem::is_directory(traces)) {
      for (const auto& t : std::filesystem::directory_iterator(traces)) {
        try {
          const auto idx = static_cast<std::size_t>(std::stoul(t.path().stem().string()));
          std::ifstream in(t.path());
          session->metrics[idx] = trace_metrics(parse_gait_csv(in));
        } catch (const std::exception&) {
          // Unusable stored traces are skipped; the log keeps the record.
        }
      }
    }
    std::lock_guard lock(mutex_);
    sessions_[id] = std::move(session);
    ++loaded;
  }
  return loaded;
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    send_json(res, 400, {{"error", "parse_error"},
                         {"message", e.what()},
                         {"row", e.row()},
                         {"column", e.column()}});
  } catch (const ValidationError& e) {
    send_json(res, 400, {{"error", "validation_error"},
                         {"message", e.what()},
                         {"fields", e.fields()}});
  } catch (const NotFoundError& e) {
    send_json(res, 404, {{"error", "not_found"}, {"message", e.what()}});
  } catch (const TimingError& e) {
    send_json(res, 425, {{"error", "timing"}, {"message", e.what()}});
  } catch (const StateError& e) {
    send_json(res, 409, {{"error", "conflict"}, {"message", e.what()}});
  } catch (const UnsupportedInputError& e) {
    send_json(res, 422, {{"error", "unsupported_input"}, {"message", e.what()}});
  } catch (const nlohmann::json::exception& e) {
    send_json(res, 400, {{"error", "bad_json"}, {"message", e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
  }
}

nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("request body is not valid JSON: ") + e.what(),
                          {"body"});
  }
}

std::string sse_frame(std::size_t index, const LogEvent& e) {
  return "id: " + std::to_string(index) + "\nevent: " + e.event +
         "\ndata: " + e.to_json().dump() + "\n\n";
}

}  // namespace

HttpService::HttpService(std::shared_ptr<SessionManager> manager)
    : manager_(std::move(manager)), server_(std::make_unique<httplib::Server>()) {
  // httplib's default also sets SO_REUSEPORT, which lets a second server
  // bind an occupied port.
  server_->set_socket_options([](int sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes),
                 sizeof yes);
  });
  install_routes();
}

HttpService::~HttpService() { stop(); }

void HttpService::install_routes() {
  auto& srv = *server_;
  auto mgr = manager_;

  srv.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  });

  srv.Post("/sessions", [mgr](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto id = mgr->create_session(parse_body(req));
      send_json(res, 201, mgr->status(id));
    });
  });

  srv.Get(R"(/sessions/([^/]+))", [mgr](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, mgr->status(req.matches[1])); });
  });

  srv.Get(R"(/sessions/([^/]+)/query)",
          [mgr](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send_json(res, 200, mgr->current_query(req.matches[1])); });
          });

  srv.Post(R"(/sessions/([^/]+)/choice)",
           [mgr](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               const auto body = parse_body(req);
               if (!body.contains("chosen") || !body["chosen"].is_string()) {
                 throw ValidationError("body must contain \"chosen\": \"A\" | \"B\"",
                                       {"chosen"});
               }
               const Option chosen = option_from_string(body["chosen"].get<std::string>());
               send_json(res, 200, mgr->post_choice(req.matches[1], chosen));
             });
           });

  srv.Post(R"(/sessions/([^/]+)/validation)",
           [mgr](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] { send_json(res, 200, mgr->begin_validation(req.matches[1])); });
           });

  srv.Post(R"(/sessions/([^/]+)/traces/(\d+))",
           [mgr](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               const auto idx = static_cast<std::size_t>(std::stoull(req.matches[2]));
               send_json(res, 200, mgr->ingest_trace(req.matches[1], idx, req.body));
             });
           });

  srv.Get(R"(/sessions/([^/]+)/report)",
          [mgr](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send_json(res, 200, mgr->report(req.matches[1])); });
          });

  srv.Get(R"(/sessions/([^/]+)/events)", [mgr](const httplib::Request& req,
                                               httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      std::size_t offset = 0;
      if (req.has_param("offset")) {
        try {
          offset = std::stoull(req.get_param_value("offset"));
        } catch (const std::exception&) {
          throw ValidationError("offset must be a non-negative integer", {"offset"});
        }
      }
      const bool follow = req.get_param_value("follow") != "0";
      mgr->events_from(id, 0);  // 404 before the stream starts
      auto cursor = std::make_shared<std::size_t>(offset);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream",
          [mgr, id, cursor, follow](std::size_t, httplib::DataSink& sink) {
            const auto events = mgr->events_from(id, *cursor);
            for (const auto& e : events) {
              const auto frame = sse_frame(*cursor, e);
              if (!sink.write(frame.data(), frame.size())) return false;
              ++*cursor;
            }
            if (!events.empty()) return true;
            if (!follow || mgr->quiescent(id) || mgr->shutting_down()) {
              sink.done();
              return true;
            }
            mgr->wait_for_events(id, *cursor, std::chrono::milliseconds(500));
            return true;
          });
    });
  });
}

bool HttpService::listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

bool HttpService::bind(const std::string& host, int port) {
  return server_->bind_to_port(host, port);
}

int HttpService::bind_any_port(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool HttpService::listen_after_bind() { return server_->listen_after_bind(); }

void HttpService::stop() {
  manager_->shutdown();
  if (server_) server_->stop();
}

bool HttpService::running() const { return server_->is_running(); }

}  // namespace prefgait
