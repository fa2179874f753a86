#include <doctest.h>

#include <algorithm>

#include "foilscope/concepts.hpp"
#include "foilscope/environments.hpp"
#include "foilscope/errors.hpp"
#include "foilscope/model.hpp"
#include "foilscope/sampler.hpp"
#include "test_support.hpp"

using namespace foilscope;

namespace {

std::shared_ptr<GridEnvironment> switch_env(std::optional<Variant> v = std::nullopt) {
  return load_map_file(test::map_path("sokoban_switch.map"), v);
}

ContrastiveQuery query_of(const GridEnvironment& env, std::vector<ActionIndex> plan,
                          std::vector<ActionIndex> foil) {
  return {env.initial_state(), std::move(plan), std::move(foil), env.goal_test()};
}

}  // namespace

TEST_CASE("failure state absorbs every action at zero cost") {
  auto env = switch_env();
  for (const ActionId& a : env->actions()) {
    auto out = env->simulate(StateHandle::failure(), a.index);
    CHECK(out.failed());
    CHECK(out.cost == 0.0);
  }
  CHECK_THROWS_AS(env->simulate(env->initial_state(), 999), ContractViolation);
}

TEST_CASE("goal compilation adds a zero-cost achieve-goal action") {
  auto env = switch_env();
  auto plan = load_action_file(*env, test::map_path("sokoban_switch.plan"));
  auto compiled = compile_goal_action(env, query_of(*env, plan, plan));
  const auto& model = *compiled.model;
  CHECK(model.action_label(model.goal_action()) == kAchieveGoal);
  CHECK(compiled.query.plan.back() == model.goal_action());
  CHECK(compiled.query.foil.back() == model.goal_action());

  auto start = model.simulate(env->initial_state(), model.goal_action());
  CHECK(start.failed());

  auto traj = execute_sequence(model, env->initial_state(), compiled.query.plan);
  REQUIRE(traj.valid());
  CHECK(traj.final_state().is_goal_end());
  CHECK(traj.step_costs.back() == 0.0);

  auto excluded = model.exploration_actions();
  CHECK(std::find(excluded.begin(), excluded.end(), model.goal_action()) == excluded.end());
}

TEST_CASE("query classification") {
  auto env = switch_env();
  auto plan = load_action_file(*env, test::map_path("sokoban_switch.plan"));
  auto foil = load_action_file(*env, test::map_path("sokoban_switch.push.foil"));

  SUBCASE("invalid foil reports the failing step") {
    auto kind = classify_query(env, query_of(*env, plan, foil));
    auto* invalid = std::get_if<InvalidFoil>(&kind);
    REQUIRE(invalid);
    CHECK(env->action_label(invalid->fail_action) == "push-down");
    CHECK(invalid->fail_index == 0);
  }
  SUBCASE("foil equal to the plan is preferred") {
    auto kind = classify_query(env, query_of(*env, plan, plan));
    CHECK(std::holds_alternative<FoilPreferred>(kind));
  }
  SUBCASE("failing plan throws") {
    CHECK_THROWS_AS(classify_query(env, query_of(*env, foil, plan)), InvalidPlan);
  }
  SUBCASE("costlier foil under the cost variant") {
    auto cost_env = switch_env(Variant::SokobanSwitchCost);
    auto cost_plan = load_action_file(*cost_env, test::map_path("sokoban_switch.plan"));
    auto cost_foil = load_action_file(*cost_env, test::map_path("sokoban_switch.push.foil"));
    auto kind = classify_query(cost_env, query_of(*cost_env, cost_plan, cost_foil));
    auto* costlier = std::get_if<CostlierFoil>(&kind);
    REQUIRE(costlier);
    CHECK(costlier->foil_cost > costlier->plan_cost);
  }
}

TEST_CASE("concept vectors pack bits across words") {
  ConceptVector v(130);
  v.set(0);
  v.set(64);
  v.set(129);
  CHECK(v.count() == 3);
  CHECK(v.true_concepts() == std::vector<ConceptIndex>{0, 64, 129});
  std::vector<ConceptIndex> subset{0, 129};
  CHECK(v.contains(subset));
  v.set(129, false);
  CHECK_FALSE(v.contains(subset));
}

TEST_CASE("negations and complements") {
  auto env = switch_env();
  auto vocab = env->vocabulary();
  auto on = vocab.find("switch_on");
  auto off = vocab.find("not_switch_on");
  REQUIRE(on);
  REQUIRE(off);
  CHECK(vocab.complement(*on) == off);
  CHECK(vocab.complement(*off) == on);
  CHECK(vocab.size() == 2 * vocab.base_count());

  auto truth = vocab.evaluate(env->initial_state());
  CHECK(truth.test(*on) != truth.test(*off));
  CHECK_THROWS_AS(vocab.evaluate(StateHandle::failure()), ContractViolation);
}

TEST_CASE("CNF from a truth table has one clause per falsifying row") {
  std::vector<ConceptIndex> vars{0, 1};
  auto clauses = cnf_from_truth_table(vars, [](std::span<const bool> x) { return x[0] || x[1]; });
  REQUIRE(clauses.size() == 1);
  CHECK(clauses[0] == std::vector<Literal>{{0, true}, {1, true}});

  auto xor_clauses =
      cnf_from_truth_table(vars, [](std::span<const bool> x) { return x[0] != x[1]; });
  CHECK(xor_clauses.size() == 2);
}

TEST_CASE("clauses evaluate as disjunctions") {
  auto env = switch_env();
  auto vocab = env->vocabulary();
  auto on = *vocab.find("switch_on");
  auto off = *vocab.find("not_switch_on");
  auto always = make_compound_clause(vocab, {{on, true}, {on, false}});
  auto truth = vocab.evaluate(env->initial_state());
  CHECK(truth.test(always));
  (void)off;
}

TEST_CASE("observation model") {
  auto exact = ObservationModel::exact(4);
  CHECK(exact.is_exact());
  ConceptVector truth(4);
  truth.set(1);
  Rng rng(7);
  CHECK(observe_vector(truth, exact, rng) == truth);

  auto flip = ObservationModel::uniform(4, 0.0, 1.0);
  CHECK_FALSE(flip.is_exact());
  auto seen = observe_vector(truth, flip, rng);
  CHECK(seen.true_concepts() == std::vector<ConceptIndex>{0, 2, 3});
}

TEST_CASE("marginals") {
  ConceptVector a(2), b(2);
  a.set(0);
  std::vector<ConceptVector> samples{a, b};
  auto m = estimate_marginals(samples);
  CHECK(m[0] == doctest::Approx(0.5));
  CHECK(m[1] == doctest::Approx(0.0));
  CHECK_THROWS_AS(estimate_marginals(std::span<const ConceptVector>{}), std::invalid_argument);
}

TEST_CASE("push costs by variant") {
  SUBCASE("switch cost: pushing with the switch off costs 10") {
    auto env = switch_env(Variant::SokobanSwitchCost);
    auto foil = load_action_file(*env, test::map_path("sokoban_switch.push.foil"));
    auto out = env->simulate(env->initial_state(), foil.front());
    REQUIRE_FALSE(out.failed());
    CHECK(out.cost == 10.0);
  }
  SUBCASE("switch precondition: pushing with the switch off fails") {
    auto env = switch_env();
    auto foil = load_action_file(*env, test::map_path("sokoban_switch.push.foil"));
    CHECK(env->simulate(env->initial_state(), foil.front()).failed());
  }
  SUBCASE("plan pushes cost 1 once the switch is on") {
    auto env = switch_env();
    auto plan = load_action_file(*env, test::map_path("sokoban_switch.plan"));
    auto traj = execute_sequence(*env, env->initial_state(), plan);
    REQUIRE(traj.valid());
    CHECK(traj.total_cost() == doctest::Approx(static_cast<double>(plan.size())));
    CHECK(env->is_goal(traj.final_state()));
  }
}

TEST_CASE("map parse errors") {
  CHECK_THROWS_AS(parse_grid("variant=nonsense\n#####\n#@.G#\n#####\n"), ParseError);
  CHECK_THROWS_AS(parse_grid("variant=sokoban-switch-prec\n#####\n#.#\n#####\n"), ParseError);
  CHECK_THROWS_AS(parse_grid("variant=sokoban-switch-prec\n#####\n#.?.#\n#####\n"), ParseError);
  auto env = switch_env();
  CHECK_THROWS_AS(parse_action_sequence(*env, "move-up\nfly-away\n"), ParseError);
  CHECK(parse_action_sequence(*env, "; comment\n\nmove-up\n").size() == 1);
  CHECK(parse_variant("key-quest") == Variant::KeyQuest);
  CHECK_FALSE(parse_variant("bogus"));
}

TEST_CASE("sampler streams are deterministic and budgeted") {
  auto env = switch_env();
  SamplerConfig cfg{{env->initial_state()}, 10, 300, 42};
  SampleStats stats;
  auto a = sample_states(*env, cfg, &stats);
  auto b = sample_states(*env, cfg);
  CHECK(a == b);
  CHECK(a.size() <= 300);
  CHECK(stats.simulate_calls <= 300 * 10);
  CHECK(a.front() == env->initial_state());

  cfg.seed = 43;
  CHECK(sample_states(*env, cfg) != a);

  cfg.walk_length = 0;
  auto anchors_only = sample_states(*env, cfg);
  CHECK(std::all_of(anchors_only.begin(), anchors_only.end(),
                    [&](StateHandle s) { return s == env->initial_state(); }));
}
