#include <doctest.h>

#include "foilscope/dialogue.hpp"
#include "foilscope/errors.hpp"
#include "test_support.hpp"

using namespace foilscope;

namespace {

std::vector<std::string> lines_of(const std::string& path) {
  std::vector<std::string> out;
  std::string text = read_text_file(path);
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    if (!line.empty() && line[0] != ';') out.push_back(line);
    pos = end + 1;
  }
  return out;
}

SessionSpec switch_spec(std::uint64_t seed = 1) {
  SessionSpec spec;
  spec.id = "t";
  spec.map_id = "sokoban_switch";
  spec.map_text = read_text_file(test::map_path("sokoban_switch.map"));
  spec.plan = lines_of(test::map_path("sokoban_switch.plan"));
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("rendered templates") {
  Explanation missing{MissingPrecondition{"switch_on", "push-down", 0, 0.99, {}}, 0.99, true, 0.5};
  CHECK(render_text(missing) ==
        "The action push-down failed in the state as the precondition switch_on was false in "
        "the state.");

  CostAbstraction ca;
  ca.entries.push_back({0, "push-down", {"on_pink_cell"}, 10.0, 1.0});
  ca.entries.push_back({1, "move-up", {}, 1.0, 1.0});
  ca.total = 11.0;
  ca.plan_cost = 4.0;
  Explanation cost{ca, 1.0, true, 0.5};
  const std::string text = render_text(cost);
  CHECK(text.find("Executing the action push-down in the presence of the concept on_pink_cell "
                  "will cost at least 10.") != std::string::npos);
  CHECK(text.find("move-up") == std::string::npos);
  CHECK(text.find("Altogether the foil costs at least 11, more than the plan's cost of 4.") !=
        std::string::npos);

  Explanation low = missing;
  low.confidence = 0.3;
  low.threshold = 0.6;
  low.threshold_met = false;
  const std::string low_text = render_text(low);
  CHECK(low_text.rfind("Low confidence (0.30 is below the reporting threshold 0.60)", 0) == 0);
  CHECK(low_text != render_text(missing));
}

TEST_CASE("explanation JSON round trip") {
  CostAbstraction ca;
  ca.entries.push_back({2, "push-down", {"on_pink_cell", "box_on_pink_cell"}, 10.0, 0.97});
  ca.total = 12.0;
  ca.plan_cost = 5.0;
  ca.conc_limit = 2;
  const std::vector<Explanation> all{
      {MissingPrecondition{"switch_on", "push-down", 3, 0.8, {0.5, 0.6, 0.8}}, 0.8, true, 0.5},
      {ca, 0.97, true, 0.5},
      {FoilPreferredView{5.0, 4.0}, 1.0, true, 0.5},
      {InsufficientVocabulary{"cost"}, 1.0, true, 0.5},
  };
  for (const Explanation& e : all) {
    auto j = explanation_to_json(e);
    auto back = explanation_from_json(j);
    CHECK(explanation_to_json(back) == j);
    CHECK(render_text(back) == render_text(e));
  }
}

TEST_CASE("session config JSON and validation") {
  SessionConfig cfg;
  cfg.kappa = 0.02;
  cfg.detector = {0.9, 0.1};
  auto back = session_config_from_json(session_config_to_json(cfg));
  CHECK(session_config_to_json(back) == session_config_to_json(cfg));

  auto partial = session_config_from_json(nlohmann::ordered_json{{"threshold", 0.7}}, cfg);
  CHECK(partial.threshold == 0.7);
  CHECK(partial.kappa == 0.02);

  SessionConfig bad;
  bad.detector = {1.3, 0.0};
  CHECK_THROWS_AS(check_session_config(bad), ContractViolation);
  bad = {};
  bad.prior = 1.0;
  CHECK_THROWS_AS(check_session_config(bad), ContractViolation);
}

TEST_CASE("format_number") {
  CHECK(format_number(10.0) == "10");
  CHECK(format_number(2.5) == "2.5");
}

TEST_CASE("session dialogue") {
  Session session(switch_spec());

  SUBCASE("foil equal to the plan is preferred") {
    const auto& e = session.explain(session.spec().plan);
    CHECK(std::holds_alternative<FoilPreferredView>(e.body));
  }
  SUBCASE("failing push names the switch") {
    const auto& e = session.explain(lines_of(test::map_path("sokoban_switch.push.foil")));
    auto* mp = std::get_if<MissingPrecondition>(&e.body);
    REQUIRE(mp);
    CHECK(mp->concept_name == "switch_on");
    CHECK(e.threshold_met);
    CHECK(mp->trace.front() == doctest::Approx(0.5));
  }
  SUBCASE("unknown mnemonic") {
    CHECK_THROWS_AS(session.explain({"move-up", "teleport"}), ParseError);
    CHECK(session.history().empty());
  }
}

TEST_CASE("session construction errors") {
  auto spec = switch_spec();
  spec.plan = {"move-up"};
  CHECK_THROWS_AS(Session{spec}, InvalidPlan);
  spec = switch_spec();
  spec.base_concepts = {"no_such_concept"};
  CHECK_THROWS_AS(Session{spec}, ParseError);
}

TEST_CASE("restricted vocabulary keeps negations") {
  auto env = load_map_file(test::map_path("sokoban_switch.map"));
  auto vocab = restricted_vocabulary(*env, {"switch_on"});
  CHECK(vocab.size() == 2);
  CHECK(vocab.find("not_switch_on"));
}

TEST_CASE("replay reproduces the history") {
  Session session(switch_spec(8));
  session.explain(lines_of(test::map_path("sokoban_switch.push.foil")));
  session.explain(session.spec().plan);
  auto dumped = session.to_json();
  REQUIRE(dumped["history"].size() == 2);
  auto replayed = Session::replay(dumped);
  CHECK(replayed.to_json().dump() == dumped.dump());

  dumped["v"] = 99;
  CHECK_THROWS_AS(Session::replay(dumped), ParseError);
}
