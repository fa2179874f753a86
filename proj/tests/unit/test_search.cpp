#include <doctest.h>

#include <algorithm>

#include "foilscope/cost_search.hpp"
#include "foilscope/dialogue.hpp"
#include "foilscope/errors.hpp"
#include "foilscope/precondition_search.hpp"
#include "test_support.hpp"

using namespace foilscope;

namespace {

InvalidFoil failure_of(const LoadedScenario& s) {
  auto kind = classify_compiled(*s.compiled.model, s.compiled.query);
  REQUIRE(std::holds_alternative<InvalidFoil>(kind));
  return std::get<InvalidFoil>(kind);
}

bool entry_has(const CostExplanation& ex, const ConceptVocabulary& vocab,
               const std::string& concept_name, double cost) {
  return std::any_of(ex.entries.begin(), ex.entries.end(), [&](const CostAbstractionEntry& e) {
    if (e.min_cost != cost) return false;
    return std::any_of(e.subset.begin(), e.subset.end(),
                       [&](ConceptIndex c) { return vocab.name(c) == concept_name; });
  });
}

}  // namespace

TEST_CASE("exact precondition search finds the switch") {
  auto s = test::scenario("switch-prec");
  const auto& model = *s.compiled.model;
  auto vocab = s.env->vocabulary();
  auto fail = failure_of(s);
  SamplerConfig sampler{query_anchors(model, s.compiled.query), kDefaultWalkLength, 2000, 3};
  auto r = find_missing_precondition(model, vocab, fail.fail_state, fail.fail_action, sampler);
  REQUIRE(r.found());
  CHECK(vocab.name(*r.concept_id()) == "switch_on");
  CHECK(r.trace.size() == r.alive_count.size());
  CHECK(r.alive_count.front() == r.hypotheses.size());
  CHECK(std::is_sorted(r.alive_count.rbegin(), r.alive_count.rend()));

  auto again = find_missing_precondition(model, vocab, fail.fail_state, fail.fail_action, sampler);
  CHECK(again.survivors == r.survivors);
}

TEST_CASE("precondition search rejects an executable action") {
  auto s = test::scenario("switch-prec");
  auto vocab = s.env->vocabulary();
  const auto& model = *s.compiled.model;
  auto move = *s.env->find_action("move-up");
  SamplerConfig sampler{{s.env->initial_state()}, 5, 10, 1};
  CHECK_THROWS_AS(find_missing_precondition(model, vocab, s.env->initial_state(), move, sampler),
                  ContractViolation);
}

TEST_CASE("probabilistic precondition search under noise") {
  auto s = test::scenario("switch-prec");
  auto vocab = s.env->vocabulary();
  const auto& model = *s.compiled.model;
  auto fail = failure_of(s);
  SessionConfig cfg;
  cfg.detector = {0.95, 0.05};
  auto r = run_precondition_search(model, vocab, s.compiled.query, fail, cfg, 17);
  REQUIRE(r.found());
  CHECK(vocab.name(*r.concept_id()) == "switch_on");
  auto posterior = std::get<PreconditionFound>(r.outcome).posterior;
  REQUIRE(posterior);
  CHECK(*posterior > 0.9);
}

TEST_CASE("precondition search reports an insufficient vocabulary") {
  auto s = test::scenario("switch-prec");
  auto vocab = vocabulary_without(*s.env, {"switch_on"});
  auto fail = failure_of(s);
  auto r = run_precondition_search(*s.compiled.model, vocab, s.compiled.query, fail,
                                   SessionConfig{}, 5);
  CHECK_FALSE(r.found());
}

TEST_CASE("abstract cost estimate over a batch") {
  CostBatch batch;
  ConceptVector a(2), b(2);
  a.set(0);
  b.set(0);
  b.set(1);
  batch.truth = {a, b, b};
  batch.observed = batch.truth;
  batch.costs = {1, 10, 12};
  std::vector<ConceptIndex> both{0, 1};
  auto est = abstract_cost_estimate(batch, both);
  REQUIRE(est);
  CHECK(est->first == 10.0);
  CHECK(est->second == 2);
  std::vector<ConceptIndex> first{0};
  CHECK(abstract_cost_estimate(batch, first)->first == 1.0);

  ConceptVector none(2);
  batch.truth = {none};
  batch.observed = batch.truth;
  batch.costs = {3};
  CHECK_FALSE(abstract_cost_estimate(batch, both));
}

TEST_CASE("cost abstraction on the cell map") {
  auto s = test::scenario("cell");
  auto vocab = s.env->vocabulary();
  auto r = run_cost_search(*s.compiled.model, vocab, s.compiled.query, SessionConfig{}, 9);
  REQUIRE(r.found());
  const auto* ex = r.explanation();
  CHECK(ex->total_abstract_cost > ex->plan_cost);
  CHECK(entry_has(*ex, vocab, "on_pink_cell", 10.0));

  auto same = run_cost_search(*s.compiled.model, vocab, s.compiled.query, SessionConfig{}, 9);
  REQUIRE(same.found());
  CHECK(same.explanation()->total_abstract_cost == ex->total_abstract_cost);
  CHECK(same.explanation()->entries.size() == ex->entries.size());
}

TEST_CASE("cost abstraction on the switch-cost map") {
  auto s = test::scenario("switch-cost");
  auto vocab = s.env->vocabulary();
  auto r = run_cost_search(*s.compiled.model, vocab, s.compiled.query, SessionConfig{}, 4);
  REQUIRE(r.found());
  CHECK(entry_has(*r.explanation(), vocab, "not_switch_on", 10.0));
}

TEST_CASE("cost search without the cost concept is insufficient") {
  auto s = test::scenario("switch-cost");
  auto vocab = vocabulary_without(*s.env, {"switch_on"});
  auto r = run_cost_search(*s.compiled.model, vocab, s.compiled.query, SessionConfig{}, 4);
  CHECK_FALSE(r.found());
}

TEST_CASE("cost search requires a costlier valid foil") {
  auto s = test::scenario("switch-prec");
  auto vocab = s.env->vocabulary();
  CHECK_THROWS_AS(run_cost_search(*s.compiled.model, vocab, s.compiled.query, SessionConfig{}, 1),
                  ContractViolation);
}
