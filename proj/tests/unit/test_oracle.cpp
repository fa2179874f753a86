#include <doctest.h>

#include <algorithm>

#include "foilscope/dialogue.hpp"
#include "foilscope/errors.hpp"
#include "foilscope/oracle.hpp"
#include "test_support.hpp"

using namespace foilscope;

TEST_CASE("radius zero enumerates exactly the anchors") {
  auto s = test::scenario("switch-prec");
  auto anchors = query_anchors(*s.compiled.model, s.compiled.query);
  auto states = enumerate_local_states(*s.env, anchors, 0);
  auto sorted = anchors;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  CHECK(states == sorted);
}

TEST_CASE("local region grows monotonically with radius") {
  auto env = load_map_file(test::map_path("sokoban_switch.map"));
  std::vector<StateHandle> anchors{env->initial_state()};
  std::vector<StateHandle> previous;
  for (std::size_t r = 0; r <= 6; ++r) {
    auto states = enumerate_local_states(*env, anchors, r);
    CHECK(states.size() >= previous.size());
    CHECK(std::includes(states.begin(), states.end(), previous.begin(), previous.end()));
    previous = std::move(states);
  }
  CHECK_THROWS_AS(enumerate_local_states(*env, anchors, 50, 10), OracleLimitExceeded);
}

TEST_CASE("ground-truth abstract cost and preconditions") {
  auto s = test::scenario("cell");
  auto vocab = s.env->vocabulary();
  auto push = *s.env->find_action("push-down");
  auto anchors = query_anchors(*s.compiled.model, s.compiled.query);
  auto states = enumerate_local_states(*s.env, anchors, 6);
  auto pink = *vocab.find("on_pink_cell");
  std::vector<ConceptIndex> subset{pink};
  auto cost = true_abstract_cost(*s.env, vocab, subset, push, states);
  REQUIRE(cost);
  CHECK(*cost == 10.0);

  auto batch = exhaustive_cost_batch(*s.env, vocab, push, states);
  CHECK(batch.size() > 0);
  CHECK(batch.truth == batch.observed);

  auto sw = test::scenario("switch-prec");
  auto sw_vocab = sw.env->vocabulary();
  auto sw_anchors = query_anchors(*sw.compiled.model, sw.compiled.query);
  auto sw_states = enumerate_local_states(*sw.env, sw_anchors, 6);
  auto pre = true_preconditions(*sw.env, sw_vocab, *sw.env->find_action("push-down"), sw_states);
  REQUIRE(pre);
  auto on = *sw_vocab.find("switch_on");
  CHECK(std::find(pre->begin(), pre->end(), on) != pre->end());
}

TEST_CASE("trivial approximation verifies and detects a corrupted cost table") {
  auto s = test::scenario("switch-prec");
  auto anchors = query_anchors(*s.compiled.model, s.compiled.query);
  auto states = enumerate_local_states(*s.env, anchors, 2);
  auto goals = s.env->goal_test();
  auto trivial = construct_trivial_approximation(*s.env, states, goals);
  auto report = verify_local_approximation(trivial.model, *s.env, states, trivial.label, goals);
  CHECK(report.ok());
  CHECK(report.states_checked == states.size());

  const ActionIndex corrupted = *s.env->find_action("move-up");
  SymbolicModel bad = trivial.model;
  auto inner = trivial.model.step;
  bad.step = [inner, corrupted](const ConceptVector& v, ActionIndex a) {
    auto out = inner(v, a);
    if (out && a == corrupted) out->cost += 1.0;
    return out;
  };
  auto bad_report = verify_local_approximation(bad, *s.env, states, trivial.label, goals);
  REQUIRE_FALSE(bad_report.ok());
  CHECK(std::all_of(bad_report.violations.begin(), bad_report.violations.end(),
                    [&](const ApproximationViolation& v) {
                      return v.condition == 'b' && v.action == corrupted;
                    }));
}

TEST_CASE("symbolic sequence cost follows the plan") {
  auto s = test::scenario("switch-prec");
  auto anchors = query_anchors(*s.compiled.model, s.compiled.query);
  auto states = enumerate_local_states(*s.env, anchors, 0);
  auto goals = s.env->goal_test();
  auto trivial = construct_trivial_approximation(*s.env, states, goals);
  auto start = trivial.label(s.env->initial_state());
  auto cost = symbolic_sequence_cost(trivial.model, start, s.plan);
  REQUIRE(cost);
  CHECK(*cost == doctest::Approx(static_cast<double>(s.plan.size())));
  CHECK_FALSE(symbolic_sequence_cost(trivial.model, start, s.foil));
}

TEST_CASE("random sokoban maps parse and stay within bounds") {
  Rng rng(99);
  for (int i = 0; i < 20; ++i) {
    auto map = random_sokoban_map(rng, Variant::SokobanCell, 6);
    CHECK(map.width() >= 4);
    CHECK(map.width() <= 6);
    CHECK(map.height() >= 4);
    CHECK(map.height() <= 6);
    CHECK_NOTHROW(make_environment(map));
  }
}
