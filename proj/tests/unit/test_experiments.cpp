#include <doctest.h>

#include <algorithm>

#include "foilscope/errors.hpp"
#include "foilscope/experiments.hpp"
#include "test_support.hpp"

using namespace foilscope;

TEST_CASE("bundled catalogue") {
  auto maps = bundled_maps(test::maps_dir());
  REQUIRE(maps.size() == 4);
  CHECK(std::is_sorted(maps.begin(), maps.end(),
                       [](const auto& a, const auto& b) { return a.id < b.id; }));
  for (const auto& m : maps) CHECK(m.plan_length > 0);
  for (const auto& s : bundled_scenarios()) CHECK_NOTHROW(test::scenario(s.id));
  CHECK_THROWS(find_scenario("nope"));
}

TEST_CASE("vocabulary_without drops a concept and its negation") {
  auto s = test::scenario("switch-prec");
  auto vocab = vocabulary_without(*s.env, {"switch_on"});
  CHECK_FALSE(vocab.find("switch_on"));
  CHECK_FALSE(vocab.find("not_switch_on"));
  CHECK(vocab.size() == s.env->vocabulary().size() - 2);
}

TEST_CASE("posterior curves") {
  auto s = test::scenario("switch-prec");
  auto vocab = s.env->vocabulary();
  SessionConfig cfg;
  cfg.precondition_budget = 200;
  cfg.detector = {0.95, 0.05};

  SUBCASE("a single seed has zero spread") {
    auto c = posterior_curves(s, vocab, cfg, 1, 3);
    CHECK(c.concept_name == "switch_on");
    REQUIRE(c.rows.size() == cfg.precondition_budget + 1);
    CHECK(c.rows.front().mean == doctest::Approx(cfg.prior));
    CHECK(std::all_of(c.rows.begin(), c.rows.end(), [](const CurveRow& r) { return r.std == 0.0; }));
    CHECK(c.rivals_gone.size() == 1);
  }
  SUBCASE("zero budget gives only the prior row") {
    cfg.precondition_budget = 0;
    auto c = posterior_curves(s, vocab, cfg, 3, 3);
    REQUIRE(c.rows.size() == 1);
    CHECK(c.rows[0].step == 0);
  }
  SUBCASE("several seeds are reproducible") {
    auto a = posterior_curves(s, vocab, cfg, 4, 11);
    auto b = posterior_curves(s, vocab, cfg, 4, 11);
    CHECK(curves_csv(a) == curves_csv(b));
    CHECK(curves_csv(a).rfind("budget_step,mean_posterior,std\n", 0) == 0);
  }
  SUBCASE("valid foils are rejected") {
    auto cost = test::scenario("switch-cost");
    CHECK_THROWS_AS(posterior_curves(cost, cost.env->vocabulary(), cfg, 1, 1), ContractViolation);
  }
}

TEST_CASE("assumption report") {
  auto s = test::scenario("switch-prec");
  AssumptionConfig cfg;
  cfg.plant_for_action = "push-down";
  auto report = assumption_report(*s.env, s.plan, cfg);
  CHECK(assumption_csv(report).rfind("action,concept,p_executable,p_all,gap\n", 0) == 0);
  for (const auto& row : report.rows) {
    CHECK(row.gap == doctest::Approx(std::abs(row.p_executable - row.p_all)));
    if (row.action == "push-down") {
      CHECK(row.concept_name != "switch_on");
      CHECK(row.concept_name != "not_switch_on");
    }
  }
  auto planted = std::find_if(report.rows.begin(), report.rows.end(), [](const AssumptionRow& r) {
    return r.concept_name == "planted_push-down" && r.action == "push-down";
  });
  REQUIRE(planted != report.rows.end());
  CHECK(planted->p_executable == doctest::Approx(1.0));
  CHECK(std::any_of(report.flagged.begin(), report.flagged.end(), [](const AssumptionRow& r) {
    return r.concept_name == "planted_push-down";
  }));

  cfg.plant_for_action = "fly";
  CHECK_THROWS_AS(assumption_report(*s.env, s.plan, cfg), ParseError);
}

TEST_CASE("validation of the bundled maps") {
  for (const auto& id : {"switch-prec", "cell", "key-quest-a"}) {
    auto s = test::scenario(id);
    auto v = validate_environment(*s.env, s.plan, 0, 2);
    CHECK(v.report.ok());
    CHECK(v.orderings_broken == 0);
    CHECK(v.orderings_checked > 0);
    CHECK(v.states > 0);
  }
}
