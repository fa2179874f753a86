#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "foilscope/service.hpp"

using namespace foilscope;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

ServiceConfig base_config() {
  ServiceConfig c;
  c.maps_dir = FOILSCOPE_MAPS_DIR;
  return c;
}

std::string create_body(std::uint64_t seed = 3) {
  return ordered_json{{"map_id", "sokoban_switch"}, {"seed", seed}}.dump();
}

ordered_json parse(const ServiceResponse& r) { return ordered_json::parse(r.body); }

std::string foil_body(std::vector<std::string> actions) {
  return ordered_json{{"actions", actions}}.dump();
}

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("foilscope-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("map listing") {
  SessionService svc(base_config());
  auto r = svc.list_maps();
  CHECK(r.status == 200);
  auto j = parse(r);
  CHECK(j["maps"].size() == 4);
}

TEST_CASE("session lifecycle") {
  SessionService svc(base_config());
  auto created = svc.create_session(create_body());
  REQUIRE(created.status == 201);
  auto summary = parse(created);
  const std::string id = summary["session_id"];
  CHECK(summary["plan"].size() == 18);

  SUBCASE("creation is idempotent") {
    auto again = svc.create_session(create_body());
    CHECK(again.status == 201);
    CHECK(again.body == created.body);
    CHECK(parse(svc.create_session(create_body(4)))["session_id"] != id);
  }
  SUBCASE("fresh sessions have no history") {
    auto s = svc.get_session(id);
    CHECK(s.status == 200);
    CHECK(parse(s)["history"].empty());
  }
  SUBCASE("foils are appended in order") {
    auto first = svc.submit_foil(id, foil_body({"push-down"}));
    REQUIRE(first.status == 200);
    auto fj = parse(first);
    CHECK(fj["index"] == 0);
    CHECK(fj["explanation"]["kind"] == "missing_precondition");
    CHECK(fj["explanation"]["concept"] == "switch_on");

    auto plan = summary["plan"].get<std::vector<std::string>>();
    auto second = svc.submit_foil(id, foil_body(plan));
    REQUIRE(second.status == 200);
    CHECK(parse(second)["index"] == 1);
    CHECK(parse(second)["explanation"]["kind"] == "foil_preferred");

    auto history = parse(svc.get_session(id))["history"];
    REQUIRE(history.size() == 2);
    CHECK(history[0]["foil"] == ordered_json::array({"push-down"}));
  }
  SUBCASE("bad foils") {
    CHECK(svc.submit_foil(id, "{").status == 400);
    CHECK(svc.submit_foil(id, foil_body({})).status == 422);
    CHECK(svc.submit_foil(id, R"({"actions":[1]})").status == 422);
    auto unknown = svc.submit_foil(id, foil_body({"move-up", "warp"}));
    CHECK(unknown.status == 422);
    CHECK(parse(unknown)["token"] == "warp");
    CHECK(parse(unknown)["index"] == 1);
    CHECK(svc.submit_foil("nope", foil_body({"move-up"})).status == 404);
  }
}

TEST_CASE("bad session requests") {
  SessionService svc(base_config());
  CHECK(svc.create_session("not json").status == 400);
  CHECK(svc.create_session("{}").status == 422);
  CHECK(svc.create_session(R"({"map_id":"missing"})").status == 404);
  CHECK(svc.create_session(R"({"map_id":"../etc"})").status == 404);
  CHECK(svc.create_session(R"({"map_id":"sokoban_switch","config":{"prior":2}})").status == 422);
  CHECK(svc.create_session(R"({"map_id":"sokoban_switch","concepts":["nope"]})").status == 422);
  CHECK(svc.get_session("nope").status == 404);
  CHECK(svc.get_job("nope").status == 404);
}

TEST_CASE("large budgets run as background jobs") {
  ServiceConfig cfg = base_config();
  cfg.sync_budget_cap = 10;
  SessionService svc(cfg);
  auto id = parse(svc.create_session(create_body()))["session_id"].get<std::string>();
  auto accepted = svc.submit_foil(id, foil_body({"push-down"}));
  REQUIRE(accepted.status == 202);
  std::string poll = parse(accepted)["poll"];
  const std::string token = poll.substr(std::string("/jobs/").size());
  ServiceResponse r;
  for (int i = 0; i < 600; ++i) {
    r = svc.get_job(token);
    if (r.status != 202) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  CHECK(r.status == 200);
  CHECK(parse(r)["explanation"]["concept"] == "switch_on");
}

TEST_CASE("sessions survive a restart with a data directory") {
  const fs::path dir = scratch_dir("restart");
  ServiceConfig cfg = base_config();
  cfg.data_dir = dir.string();
  std::string id;
  std::string before;
  {
    SessionService svc(cfg);
    id = parse(svc.create_session(create_body()))["session_id"];
    REQUIRE(svc.submit_foil(id, foil_body({"push-down"})).status == 200);
    before = svc.get_session(id).body;
  }
  SessionService restarted(cfg);
  CHECK(restarted.restored() == 1);
  auto after = restarted.get_session(id);
  CHECK(after.status == 200);
  CHECK(after.body == before);
  fs::remove_all(dir);
}

TEST_CASE("HTTP round trip") {
  SessionService svc(base_config());
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto maps = client.Get("/maps");
  REQUIRE(maps);
  CHECK(maps->status == 200);
  CHECK(ordered_json::parse(maps->body)["maps"].size() == 4);

  auto created = client.Post("/sessions", create_body(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = ordered_json::parse(created->body)["session_id"];

  auto foil = client.Post("/sessions/" + id + "/foils", foil_body({"push-down"}),
                          "application/json");
  REQUIRE(foil);
  CHECK(foil->status == 200);
  CHECK_FALSE(foil->get_header_value("Access-Control-Allow-Origin").empty());

  auto session = client.Get("/sessions/" + id);
  REQUIRE(session);
  CHECK(ordered_json::parse(session->body)["history"].size() == 1);

  auto missing = client.Get("/sessions/unknown");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  server.stop();
  listener.join();
}
