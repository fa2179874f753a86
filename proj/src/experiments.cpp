#include "foilscope/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "foilscope/errors.hpp"
#include "foilscope/sampler.hpp"

namespace foilscope {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

const std::vector<Scenario>& bundled_scenarios() {
  static const std::vector<Scenario> scenarios = {
      {"switch-prec", "sokoban_switch", "push", Variant::SokobanSwitchPrec, false, "push-down",
       {"switch_on"}, 0.0, {"switch_on"}},
      {"key-quest-a", "key_quest_s1", "a", std::nullopt, false, "move-right", {"not_on_rope"}, 0.0,
       {"on_rope"}},
      {"key-quest-b", "key_quest_s1", "b", std::nullopt, false, "move-left",
       {"not_on_left_ledge"}, 0.0, {"on_left_ledge"}},
      {"key-quest-c", "key_quest_s1", "c", std::nullopt, false, "move-left",
       {"not_skull_on_left"}, 0.0, {"skull_on_left"}},
      {"key-quest-d", "key_quest_s4", "d", std::nullopt, false, "move-down",
       {"is_clear_down_of_crab"}, 0.0, {"is_clear_down_of_crab"}},
      {"switch-cost", "sokoban_switch", "push", Variant::SokobanSwitchCost, true, "push-down",
       {"not_switch_on"}, 10.0, {"switch_on"}},
      {"cell", "sokoban_cell", "push", std::nullopt, true, "push-down", {"on_pink_cell"}, 10.0,
       {"on_pink_cell", "box_on_pink_cell"}},
      {"key-quest-attack", "key_quest_s1", "attack", std::nullopt, true, "attack",
       {"skull_on_left"}, 500.0, {}},
  };
  return scenarios;
}

const Scenario& find_scenario(const std::string& id) {
  for (const Scenario& s : bundled_scenarios()) {
    if (s.id == id) return s;
  }
  throw std::out_of_range("unknown scenario '" + id + "'");
}

LoadedScenario load_query(const std::string& map_path, const std::string& plan_path,
                          const std::string& foil_path, std::optional<Variant> variant) {
  LoadedScenario out;
  out.env = load_map_file(map_path, variant);
  out.plan = load_action_file(*out.env, plan_path);
  out.foil = load_action_file(*out.env, foil_path);
  out.compiled =
      compile_goal_action(out.env, {out.env->initial_state(), out.plan, out.foil, out.env->goal_test()});
  return out;
}

LoadedScenario load_scenario(const Scenario& scenario, const std::string& maps_dir) {
  return load_query(join_path(maps_dir, scenario.map_id + ".map"),
                    join_path(maps_dir, scenario.map_id + ".plan"),
                    join_path(maps_dir, scenario.map_id + "." + scenario.foil_id + ".foil"),
                    scenario.variant);
}

ConceptVocabulary vocabulary_without(const GridEnvironment& env,
                                     const std::vector<std::string>& drop) {
  const ConceptVocabulary base = env.base_vocabulary();
  ConceptVocabulary v;
  for (std::size_t c = 0; c < base.size(); ++c) {
    const ConceptInfo& info = base.info(static_cast<ConceptIndex>(c));
    if (std::find(drop.begin(), drop.end(), info.name) != drop.end()) continue;
    v.add_base(info.name, info.detector, info.description);
  }
  return extend_with_negations(std::move(v));
}

std::vector<MapCatalogEntry> bundled_maps(const std::string& maps_dir) {
  std::vector<MapCatalogEntry> out;
  for (const auto& entry : std::filesystem::directory_iterator(maps_dir)) {
    const auto& path = entry.path();
    if (path.extension() != ".map") continue;
    auto plan_path = path;
    plan_path.replace_extension(".plan");
    if (!std::filesystem::exists(plan_path)) continue;
    const auto env = load_map_file(path.string());
    MapCatalogEntry e;
    e.id = path.stem().string();
    e.variant = std::string(variant_name(env->variant()));
    e.width = env->width();
    e.height = env->height();
    e.plan_length = load_action_file(*env, plan_path.string()).size();
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(),
            [](const MapCatalogEntry& a, const MapCatalogEntry& b) { return a.id < b.id; });
  return out;
}

CurveResult posterior_curves(const LoadedScenario& scenario, const ConceptVocabulary& vocab,
                             const SessionConfig& config, std::size_t seeds,
                             std::uint64_t base_seed, std::optional<std::string> concept_name) {
  const GoalCompiledModel& model = *scenario.compiled.model;
  const QueryKind kind = classify_compiled(model, scenario.compiled.query);
  const auto* failure = std::get_if<InvalidFoil>(&kind);
  if (failure == nullptr) throw ContractViolation("curves need a foil that fails");
  if (seeds == 0) throw ContractViolation("curves need at least one seed");

  // Header candidates are resolved against the first run's hypotheses, since
  // one action can carry several expected preconditions.
  std::vector<std::string> candidates;
  if (!concept_name) {
    const std::string prefix = model.action_label(failure->fail_action) + ":";
    for (const std::string& v : scenario.env->map().header_values("expect_precondition")) {
      if (v.rfind(prefix, 0) == 0) candidates.push_back(v.substr(prefix.size()));
    }
  }

  const std::size_t rows = config.precondition_budget + 1;
  std::vector<std::vector<double>> series;
  CurveResult out;
  for (std::size_t i = 0; i < seeds; ++i) {
    const PreconditionResult r = run_precondition_search(
        model, vocab, scenario.compiled.query, *failure, config, derive_seed(base_seed, i));
    for (const std::string& name : candidates) {
      if (concept_name) break;
      const auto c = vocab.find(name);
      if (c && r.hypothesis_slot(*c)) concept_name = name;
    }
    if (!concept_name) {
      if (!r.found()) throw ContractViolation("no concept to trace: the search found none");
      concept_name = vocab.name(*r.concept_id());
    }
    const auto c = vocab.find(*concept_name);
    const auto slot = c ? r.hypothesis_slot(*c) : std::nullopt;
    if (!slot) {
      throw ContractViolation("'" + *concept_name + "' is not a hypothesis for this failure");
    }
    std::vector<double> s;
    s.reserve(rows);
    for (const auto& row : r.trace) s.push_back(row[*slot]);
    while (s.size() < rows) s.push_back(s.empty() ? config.prior : s.back());
    s.resize(rows);
    series.push_back(std::move(s));

    std::optional<std::size_t> gone;
    for (std::size_t k = 0; k < r.alive_count.size(); ++k) {
      if (r.alive_count[k] <= 1 && r.trace[k][*slot] > 0.0) {
        gone = k;
        break;
      }
    }
    out.rivals_gone.push_back(gone);
  }
  out.concept_name = *concept_name;
  for (std::size_t k = 0; k < rows; ++k) {
    double mean = 0.0;
    for (const auto& s : series) mean += s[k];
    mean /= static_cast<double>(series.size());
    double var = 0.0;
    for (const auto& s : series) var += (s[k] - mean) * (s[k] - mean);
    var /= static_cast<double>(series.size());
    out.rows.push_back({k, mean, std::sqrt(var)});
  }
  return out;
}

std::string curves_csv(const CurveResult& curves) {
  std::ostringstream os;
  os << "budget_step,mean_posterior,std\n";
  for (const CurveRow& r : curves.rows) {
    os << r.step << ',' << num(r.mean) << ',' << num(r.std) << '\n';
  }
  return os.str();
}

AssumptionReport assumption_report(const GridEnvironment& env,
                                   const std::vector<ActionIndex>& plan,
                                   const AssumptionConfig& config) {
  ConceptVocabulary base = env.base_vocabulary();
  if (config.plant_for_action) {
    const auto a = env.find_action(*config.plant_for_action);
    if (!a) throw ParseError("unknown action '" + *config.plant_for_action + "'", 1, 1);
    const ActionIndex act = *a;
    const GridEnvironment* e = &env;
    base.add_base("planted_" + *config.plant_for_action,
                  [e, act](StateHandle s) { return !e->simulate(s, act).failed(); },
                  "true exactly where the action executes");
  }
  const ConceptVocabulary vocab = extend_with_negations(std::move(base));

  std::vector<StateHandle> anchors;
  for (StateHandle s : execute_sequence(env, env.initial_state(), plan).states) {
    if (s.is_live() && std::find(anchors.begin(), anchors.end(), s) == anchors.end()) {
      anchors.push_back(s);
    }
  }
  const std::vector<StateHandle> states =
      config.exhaustive
          ? env.all_states()
          : sample_states(env, {anchors, config.walk_length, config.samples, config.seed});
  std::vector<ConceptVector> labels;
  labels.reserve(states.size());
  for (StateHandle s : states) labels.push_back(vocab.evaluate(s));
  const ConceptMarginals all = estimate_marginals(labels);

  const GroundTruth truth = env.ground_truth();
  AssumptionReport report;
  report.samples = states.size();
  for (ActionIndex a : env.exploration_actions()) {
    const std::string& label = env.action_label(a);
    std::vector<ConceptIndex> skip;
    auto skip_name = [&](const std::string& name) {
      if (const auto c = vocab.find(name)) {
        skip.push_back(*c);
        if (const auto comp = vocab.complement(*c)) skip.push_back(*comp);
      }
    };
    for (const std::string& n : truth.preconditions_of(label)) skip_name(n);
    for (const CostRule& rule : truth.cost_rules) {
      if (rule.action != label) continue;
      for (const std::string& n : rule.concepts) skip_name(n);
    }

    std::vector<ConceptVector> exec;
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (!env.simulate(states[i], a).failed()) exec.push_back(labels[i]);
    }
    AssumptionSummary summary;
    summary.action = label;
    summary.executable = exec.size();
    if (exec.empty()) {
      report.summaries.push_back(std::move(summary));
      continue;
    }
    const ConceptMarginals here = estimate_marginals(exec);
    std::size_t counted = 0;
    for (std::size_t c = 0; c < vocab.size(); ++c) {
      const auto ci = static_cast<ConceptIndex>(c);
      if (std::find(skip.begin(), skip.end(), ci) != skip.end()) continue;
      AssumptionRow row{label, vocab.name(ci), here.p[c], all.p[c],
                        std::fabs(here.p[c] - all.p[c])};
      summary.mean_gap += row.gap;
      ++counted;
      if (row.gap > summary.max_gap || summary.worst_concept.empty()) {
        summary.max_gap = row.gap;
        summary.worst_concept = row.concept_name;
      }
      if (row.gap > config.flag_gap) report.flagged.push_back(row);
      report.rows.push_back(std::move(row));
    }
    if (counted > 0) summary.mean_gap /= static_cast<double>(counted);
    report.summaries.push_back(std::move(summary));
  }
  return report;
}

std::string assumption_csv(const AssumptionReport& report) {
  std::ostringstream os;
  os << "action,concept,p_executable,p_all,gap\n";
  for (const AssumptionRow& r : report.rows) {
    os << r.action << ',' << r.concept_name << ',' << num(r.p_executable) << ','
       << num(r.p_all) << ',' << num(r.gap) << '\n';
  }
  return os.str();
}

ValidationResult validate_environment(const GridEnvironment& env,
                                      const std::vector<ActionIndex>& plan, std::size_t radius,
                                      std::size_t max_foil_length) {
  std::vector<StateHandle> anchors;
  for (StateHandle s : execute_sequence(env, env.initial_state(), plan).states) {
    if (s.is_live()) anchors.push_back(s);
  }
  ValidationResult out;
  out.radius = radius;
  const std::vector<StateHandle> region = enumerate_local_states(env, anchors, radius);
  out.states = region.size();
  const GoalTest goals = env.goal_test();
  const TrivialApproximation approx = construct_trivial_approximation(env, region, goals);
  out.report = verify_local_approximation(approx.model, env, region, approx.label, goals);

  // Orderings: every exploration sequence up to max_foil_length whose true
  // trajectory stays in the region must compare with the plan the same way.
  const StateHandle start = env.initial_state();
  const ConceptVector start_label = approx.label(start);
  const Trajectory plan_run = execute_sequence(env, start, plan);
  if (plan_run.terminated_at) return out;
  const double plan_cost = plan_run.total_cost();
  const auto sym_plan = symbolic_sequence_cost(approx.model, start_label, plan);
  const std::vector<ActionIndex> actions = env.exploration_actions();
  std::vector<ActionIndex> seq;
  const auto in_region = [&](StateHandle s) {
    return !s.is_live() || std::binary_search(region.begin(), region.end(), s);
  };
  std::function<void()> walk = [&]() {
    if (!seq.empty()) {
      const Trajectory t = execute_sequence(env, start, seq);
      if (std::all_of(t.states.begin(), t.states.end(), in_region)) {
        ++out.orderings_checked;
        const auto sym = symbolic_sequence_cost(approx.model, start_label, seq);
        const bool valid = !t.terminated_at;
        bool same = valid == sym.has_value() && sym_plan.has_value();
        if (same && valid) {
          same = (t.total_cost() < plan_cost) == (*sym < *sym_plan) &&
                 (t.total_cost() > plan_cost) == (*sym > *sym_plan);
        }
        if (!same) ++out.orderings_broken;
      }
    }
    if (seq.size() == max_foil_length) return;
    for (ActionIndex a : actions) {
      seq.push_back(a);
      walk();
      seq.pop_back();
    }
  };
  walk();
  return out;
}

}  // namespace foilscope
