#include <doctest.h>
#include <httplib.h>

#include <sstream>

#include "resus/http_server.hpp"

using namespace resus;
using nlohmann::json;

namespace {

struct Server {
  Server() : service(options()), http(service) { port = http.start("127.0.0.1", 0); }
  ~Server() { http.stop(); }

  static SessionService::Options options() {
    SessionService::Options o;
    o.tick_period = std::chrono::milliseconds{10};
    return o;
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(5, 0);
    return c;
  }

  SessionService service;
  HttpServer http;
  int port = 0;
};

std::string create(httplib::Client& c, const std::string& body = {}) {
  auto res = c.Post("/sessions", body, "application/json");
  REQUIRE(res);
  REQUIRE(res->status == 201);
  return json::parse(res->body).at("session_id").get<std::string>();
}

json command(httplib::Client& c, const std::string& id, const std::string& kind, const std::string& text = {}) {
  json body{{"kind", kind}};
  if (!text.empty()) body["payload"] = {{"text", text}};
  auto res = c.Post("/sessions/" + id + "/commands", body.dump(), "application/json");
  REQUIRE(res);
  REQUIRE(res->status == 200);
  return json::parse(res->body);
}

std::vector<json> ndjson(const std::string& body) {
  std::vector<json> out;
  std::istringstream in(body);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

}  // namespace

TEST_CASE("create, command, snapshot") {
  Server s;
  auto c = s.client();
  auto id = create(c);

  auto snap = c.Get("/sessions/" + id + "/snapshot");
  REQUIRE(snap);
  CHECK(snap->status == 200);
  auto j = json::parse(snap->body);
  CHECK(j["phase"] == "Analysis");
  CHECK(j["last_seq"].get<int>() >= 2);

  auto ack = command(c, id, "AnalyzeRhythm");
  CHECK(ack["accepted"] == true);
  CHECK(ack["events"][0]["kind"] == "RhythmSelectionOpened");

  auto rejected = command(c, id, "Defibrillate");
  CHECK(rejected["accepted"] == false);
  CHECK(rejected["reason"] == "not-enabled");

  auto note = command(c, id, "AddNote", "IV access");
  CHECK(note["events"][0]["payload"]["text"] == "IV access");
}

TEST_CASE("error statuses") {
  Server s;
  auto c = s.client();
  auto bad_config = c.Post("/sessions", R"({"adrenaline_interval":0})", "application/json");
  REQUIRE(bad_config);
  CHECK(bad_config->status == 400);
  CHECK(json::parse(bad_config->body)["fields"] == json::array({"adrenaline_interval"}));

  auto missing = c.Get("/sessions/nope/snapshot");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  auto id = create(c);
  auto unknown_kind = c.Post("/sessions/" + id + "/commands", R"({"kind":"Jump"})", "application/json");
  REQUIRE(unknown_kind);
  CHECK(unknown_kind->status == 400);
  auto garbage = c.Post("/sessions/" + id + "/commands", "{", "application/json");
  REQUIRE(garbage);
  CHECK(garbage->status == 400);
}

TEST_CASE("event feed history and follow") {
  Server s;
  auto c = s.client();
  auto id = create(c);
  command(c, id, "AnalyzeRhythm");
  command(c, id, "AddNote", "hello");

  auto history = c.Get("/sessions/" + id + "/events?from_seq=3&follow=0");
  REQUIRE(history);
  CHECK(history->status == 200);
  auto lines = ndjson(history->body);
  REQUIRE(lines.size() >= 2);
  CHECK(lines[0]["seq"] == 3);
  CHECK(lines[0]["kind"] == "RhythmSelectionOpened");

  std::thread ender([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds{50});
    auto c2 = s.client();
    command(c2, id, "EndSession");
  });
  auto followed = c.Get("/sessions/" + id + "/events?from_seq=1&follow=1");
  ender.join();
  REQUIRE(followed);
  auto all = ndjson(followed->body);
  REQUIRE(!all.empty());
  CHECK(all.back()["kind"] == "SessionEnded");
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i]["seq"] == i + 1);
}

TEST_CASE("export returns a sealed session file") {
  Server s;
  auto c = s.client();
  auto id = create(c, R"({"adrenaline_interval":180})");
  command(c, id, "AnalyzeRhythm");
  command(c, id, "SelectAsystolePea");
  command(c, id, "AdministerAdrenaline");
  auto res = c.Get("/sessions/" + id + "/export");
  REQUIRE(res);
  CHECK(res->status == 200);
  auto log = parse_session(res->body);
  CHECK(log.session_id == id);
  CHECK(log.config.adrenaline_interval == Duration::from_seconds(180));
  CHECK_NOTHROW(replay_verify(log));
}
