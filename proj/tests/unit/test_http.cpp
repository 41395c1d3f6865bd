#include <doctest.h>

#include <sstream>
#include <thread>

#include <httplib.h>

#include "prefgait/session_service.hpp"
#include "support.hpp"

using namespace prefgait;
using prefgait::testing::SyntheticGait;
using prefgait::testing::TempDir;
using prefgait::testing::synthetic_trace;

namespace {

class Server {
 public:
  Server()
      : clock_(std::make_shared<ManualClock>(100.0)),
        manager_(std::make_shared<SessionManager>(dir_.path(), clock_)),
        service_(manager_) {
    port_ = service_.bind_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { service_.listen_after_bind(); });
    for (int i = 0; i < 200 && !service_.running(); ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }
  ~Server() {
    service_.stop();
    thread_.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    return c;
  }
  ManualClock& clock() { return *clock_; }
  SessionManager& manager() { return *manager_; }
  int port() const { return port_; }

 private:
  TempDir dir_;
  std::shared_ptr<ManualClock> clock_;
  std::shared_ptr<SessionManager> manager_;
  HttpService service_;
  std::thread thread_;
  int port_ = -1;
};

nlohmann::json body(const httplib::Result& r) { return nlohmann::json::parse(r->body); }

struct SseFrame {
  std::size_t id;
  std::string event;
  nlohmann::json data;
};

std::vector<SseFrame> parse_sse(const std::string& text) {
  std::vector<SseFrame> frames;
  std::istringstream in(text);
  SseFrame f{};
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("id: ", 0) == 0) f.id = std::stoul(line.substr(4));
    else if (line.rfind("event: ", 0) == 0) f.event = line.substr(7);
    else if (line.rfind("data: ", 0) == 0) f.data = nlohmann::json::parse(line.substr(6));
    else if (line.empty()) frames.push_back(f), f = SseFrame{};
  }
  return frames;
}

}  // namespace

TEST_SUITE("http") {

TEST_CASE("status codes") {
  Server srv;
  auto c = srv.client();
  auto health = c.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto created = c.Post("/sessions", "{}", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = body(created).at("id");

  CHECK(c.Get("/sessions/" + id)->status == 200);
  CHECK(c.Get("/sessions/unknown")->status == 404);
  CHECK(c.Get("/sessions/unknown/query")->status == 404);
  CHECK(c.Post("/sessions", "{not json", "application/json")->status == 400);
  const auto bad_cfg = c.Post("/sessions", R"({"config": {"typo": 1}})", "application/json");
  CHECK(bad_cfg->status == 400);
  CHECK(body(bad_cfg).at("fields") == nlohmann::json{"typo"});

  const auto q = c.Get("/sessions/" + id + "/query");
  CHECK(q->status == 200);
  CHECK(body(q).at("A").at("features").is_object());

  const auto early = c.Post("/sessions/" + id + "/choice", R"({"chosen":"A"})", "application/json");
  CHECK(early->status == 425);
  CHECK(c.Post("/sessions/" + id + "/choice", R"({"chosen":"C"})", "application/json")->status ==
        400);
  CHECK(c.Post("/sessions/" + id + "/choice", "{}", "application/json")->status == 400);
  srv.clock().advance(45.0);
  CHECK(c.Post("/sessions/" + id + "/choice", R"({"chosen":"A"})", "application/json")->status ==
        200);
  CHECK(c.Post("/sessions/" + id + "/validation", "", "application/json")->status == 409);

  SyntheticGait no_contact;
  no_contact.with_contact = false;
  std::ostringstream csv;
  write_gait_csv(csv, synthetic_trace(no_contact));
  CHECK(c.Post("/sessions/" + id + "/traces/0", csv.str(), "text/csv")->status == 422);
  const auto garbled = c.Post("/sessions/" + id + "/traces/0", "time_s\nx\n", "text/csv");
  CHECK(garbled->status == 400);
  CHECK(body(garbled).at("error") == "parse_error");
  std::ostringstream good;
  write_gait_csv(good, synthetic_trace(SyntheticGait{}));
  CHECK(c.Post("/sessions/" + id + "/traces/99", good.str(), "text/csv")->status == 400);
  CHECK(c.Post("/sessions/" + id + "/traces/2", good.str(), "text/csv")->status == 200);
  CHECK(c.Get("/sessions/" + id + "/report")->status == 200);
  CHECK(c.Get("/sessions/" + id + "/events?offset=abc")->status == 400);
}

TEST_CASE("simulated session over HTTP and event replay") {
  Server srv;
  auto c = srv.client();
  const auto created = c.Post(
      "/sessions", R"({"mode":"simulated","oracle":{"beta":"inf","seed":2},"config":{"seed":4}})",
      "application/json");
  REQUIRE(created->status == 201);
  const std::string id = body(created).at("id");
  CHECK(body(created).at("finished") == true);
  CHECK(c.Get("/sessions/" + id + "/query")->status == 409);

  const auto stream = c.Get("/sessions/" + id + "/events?offset=0");
  REQUIRE(stream);
  CHECK(stream->status == 200);
  CHECK(stream->get_header_value("Content-Type") == "text/event-stream");
  const auto frames = parse_sse(stream->body);
  const auto events = srv.manager().events_from(id, 0);
  REQUIRE(frames.size() == events.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(frames[i].id == i);
    CHECK(frames[i].event == events[i].event);
    CHECK(LogEvent::from_json(frames[i].data) == events[i]);
  }

  const auto tail = parse_sse(c.Get("/sessions/" + id + "/events?offset=5")->body);
  REQUIRE(tail.size() == events.size() - 5);
  CHECK(tail.front().id == 5);
  CHECK(parse_sse(c.Get("/sessions/" + id + "/events?offset=1000")->body).empty());
}

TEST_CASE("concurrent subscribers see the same live sequence") {
  Server srv;
  auto c = srv.client();
  const std::string id = body(c.Post("/sessions", R"({"config":{"comparisons":2}})",
                                     "application/json"))
                             .at("id");
  std::string a;
  std::string b;
  auto subscribe = [&](std::string& out) {
    auto sub = srv.client();
    auto r = sub.Get("/sessions/" + id + "/events");
    if (r) out = r->body;
  };
  std::thread ta(subscribe, std::ref(a));
  std::thread tb(subscribe, std::ref(b));
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  for (int k = 0; k < 2; ++k) {
    srv.clock().advance(45.0);
    auto r = c.Post("/sessions/" + id + "/choice", R"({"chosen":"B"})", "application/json");
    REQUIRE(r->status == 200);
  }
  ta.join();
  tb.join();
  CHECK_FALSE(a.empty());
  CHECK(a == b);
  const auto frames = parse_sse(a);
  REQUIRE_FALSE(frames.empty());
  CHECK(frames.back().event == "finished");
  CHECK(frames.size() == srv.manager().events_from(id, 0).size());
}

TEST_CASE("a second service cannot bind an occupied port") {
  Server srv;
  TempDir other;
  HttpService second(std::make_shared<SessionManager>(other.path()));
  CHECK_FALSE(second.bind("127.0.0.1", srv.port()));
}

}  // TEST_SUITE
