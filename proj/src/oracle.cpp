#include "foilscope/oracle.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>
#include <unordered_set>

#include "foilscope/errors.hpp"

namespace foilscope {

std::vector<StateHandle> enumerate_local_states(const BlackBoxModel& model,
                                                std::span<const StateHandle> anchors,
                                                std::size_t radius, std::size_t max_states) {
  const std::vector<ActionIndex> actions = model.exploration_actions();
  std::unordered_set<StateHandle, StateHandleHash> seen;
  std::deque<std::pair<StateHandle, std::size_t>> frontier;
  for (StateHandle a : anchors) {
    if (!a.is_live()) throw ContractViolation("anchors must be live states");
    if (seen.insert(a).second) frontier.emplace_back(a, 0);
  }
  while (!frontier.empty()) {
    const auto [s, depth] = frontier.front();
    frontier.pop_front();
    if (depth == radius) continue;
    for (ActionIndex a : actions) {
      const StateHandle next = model.simulate(s, a).next;
      if (!next.is_live() || !seen.insert(next).second) continue;
      if (seen.size() > max_states) {
        throw OracleLimitExceeded("local region exceeds " + std::to_string(max_states) +
                                  " states");
      }
      frontier.emplace_back(next, depth + 1);
    }
  }
  std::vector<StateHandle> out(seen.begin(), seen.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::vector<ConceptIndex>> true_preconditions(const BlackBoxModel& model,
                                                            const ConceptVocabulary& vocab,
                                                            ActionIndex action,
                                                            std::span<const StateHandle> states) {
  std::optional<ConceptVector> common;
  for (StateHandle s : states) {
    if (model.simulate(s, action).failed()) continue;
    const ConceptVector present = vocab.evaluate(s);
    if (!common) {
      common = present;
      continue;
    }
    for (std::size_t c = 0; c < vocab.size(); ++c) {
      const auto ci = static_cast<ConceptIndex>(c);
      if (!present.test(ci)) common->set(ci, false);
    }
  }
  if (!common) return std::nullopt;
  return common->true_concepts();
}

std::optional<double> true_abstract_cost(const BlackBoxModel& model,
                                         const ConceptVocabulary& vocab,
                                         std::span<const ConceptIndex> subset,
                                         ActionIndex action,
                                         std::span<const StateHandle> states) {
  std::optional<double> low;
  for (StateHandle s : states) {
    const TransitionOutcome out = model.simulate(s, action);
    if (out.failed() || !vocab.evaluate(s).contains(subset)) continue;
    low = low ? std::min(*low, out.cost) : out.cost;
  }
  return low;
}

CostBatch exhaustive_cost_batch(const BlackBoxModel& model, const ConceptVocabulary& vocab,
                                ActionIndex action, std::span<const StateHandle> states) {
  CostBatch batch;
  batch.action = action;
  for (StateHandle s : states) {
    const TransitionOutcome out = model.simulate(s, action);
    if (out.failed()) continue;
    batch.truth.push_back(vocab.evaluate(s));
    batch.observed.push_back(batch.truth.back());
    batch.costs.push_back(out.cost);
  }
  batch.stats.emitted = states.size();
  return batch;
}

ApproximationReport verify_local_approximation(const SymbolicModel& symbolic,
                                               const BlackBoxModel& model,
                                               std::span<const StateHandle> states,
                                               const Labelling& label, const GoalTest& goals) {
  ApproximationReport report;
  const std::vector<ActionIndex> actions = model.exploration_actions();
  std::optional<ConceptVector> goal_meet;
  for (StateHandle s : states) {
    ++report.states_checked;
    const ConceptVector here = label(s);
    for (ActionIndex a : actions) {
      const TransitionOutcome truth = model.simulate(s, a);
      const auto sym = symbolic.step(here, a);
      if (truth.failed() || !sym) {
        if (truth.failed() != !sym) report.violations.push_back({s, a, 'a'});
        continue;
      }
      if (!(sym->next == label(truth.next))) report.violations.push_back({s, a, 'a'});
      if (sym->cost != truth.cost) report.violations.push_back({s, a, 'b'});
    }
    if (goals(s)) {
      if (!goal_meet) {
        goal_meet = here;
      } else {
        for (std::size_t c = 0; c < here.size(); ++c) {
          if (!here.test(static_cast<ConceptIndex>(c))) goal_meet->set(static_cast<ConceptIndex>(c), false);
        }
      }
    }
  }
  if (goal_meet && !(*goal_meet == symbolic.goal)) {
    report.violations.push_back({StateHandle::goal_end(), -1, 'c'});
  }
  const std::vector<ConceptIndex> goal_concepts = symbolic.goal.true_concepts();
  for (StateHandle s : states) {
    if (label(s).contains(goal_concepts) != goals(s)) report.violations.push_back({s, -1, 'c'});
  }
  return report;
}

TrivialApproximation construct_trivial_approximation(const BlackBoxModel& model,
                                                     std::span<const StateHandle> states,
                                                     const GoalTest& goals) {
  auto shared = std::make_shared<std::unordered_map<StateHandle, std::size_t, StateHandleHash>>();
  TrivialApproximation out;
  out.states.assign(states.begin(), states.end());
  for (std::size_t i = 0; i < out.states.size(); ++i) shared->emplace(out.states[i], i);
  const std::size_t n = out.states.size() + 1;
  const ConceptIndex goal_bit = static_cast<ConceptIndex>(out.states.size());

  out.label = [shared, n, goal_bit, goals](StateHandle s) {
    ConceptVector v(n);
    if (auto it = shared->find(s); it != shared->end()) {
      v.set(static_cast<ConceptIndex>(it->second));
    }
    if (s.is_live() && goals(s)) v.set(goal_bit);
    return v;
  };

  // Tables indexed by (state indicator, action).
  struct Row {
    std::optional<SymbolicStep> step;
  };
  const auto actions = model.actions();
  auto table = std::make_shared<std::vector<std::vector<Row>>>(
      out.states.size(), std::vector<Row>(actions.size()));
  for (std::size_t i = 0; i < out.states.size(); ++i) {
    for (const ActionId& a : actions) {
      const TransitionOutcome t = model.simulate(out.states[i], a.index);
      if (t.failed()) continue;
      (*table)[i][static_cast<std::size_t>(a.index)].step = SymbolicStep{out.label(t.next), t.cost};
    }
  }

  // The goal is the intersection of the goal-state labels; the goal bit keeps
  // it non-trivial when the region holds several goal states.
  out.model.concept_count = n;
  std::optional<ConceptVector> meet;
  for (StateHandle s : out.states) {
    if (!goals(s)) continue;
    const ConceptVector v = out.label(s);
    if (!meet) {
      meet = v;
      continue;
    }
    for (std::size_t c = 0; c < n; ++c) {
      if (!v.test(static_cast<ConceptIndex>(c))) meet->set(static_cast<ConceptIndex>(c), false);
    }
  }
  if (meet) {
    out.model.goal = *meet;
  } else {
    out.model.goal = ConceptVector(n);
    out.model.goal.set(goal_bit);
  }
  out.model.step = [table, n](const ConceptVector& v,
                              ActionIndex a) -> std::optional<SymbolicStep> {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (v.test(static_cast<ConceptIndex>(i))) {
        return (*table)[i].at(static_cast<std::size_t>(a)).step;
      }
    }
    return std::nullopt;
  };
  return out;
}

std::optional<double> symbolic_sequence_cost(const SymbolicModel& model, ConceptVector start,
                                             std::span<const ActionIndex> actions) {
  double total = 0.0;
  for (ActionIndex a : actions) {
    const auto step = model.step(start, a);
    if (!step) return std::nullopt;
    total += step->cost;
    start = step->next;
  }
  return total;
}

GridMap random_sokoban_map(Rng& rng, Variant variant, int max_side) {
  if (!is_sokoban(variant)) throw ContractViolation("random maps are sokoban-only");
  if (max_side < 4) throw ContractViolation("random maps need sides of at least 4");
  const int w = 4 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_side - 3)));
  const int h = 4 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_side - 3)));
  GridMap map;
  map.variant = variant;
  map.rows.assign(static_cast<std::size_t>(h), std::string(static_cast<std::size_t>(w), '#'));
  std::vector<std::pair<int, int>> interior;
  for (int r = 1; r + 1 < h; ++r) {
    for (int c = 1; c + 1 < w; ++c) interior.emplace_back(r, c);
  }
  // Shuffle, then hand out special cells first; the rest become floor or wall.
  for (std::size_t i = interior.size(); i > 1; --i) {
    std::swap(interior[i - 1], interior[rng.index(i)]);
  }
  auto put = [&](std::size_t i, char g) {
    map.rows[static_cast<std::size_t>(interior[i].first)]
            [static_cast<std::size_t>(interior[i].second)] = g;
  };
  put(0, '@');
  put(1, '$');
  put(2, 'T');
  std::size_t next = 3;
  if (variant != Variant::SokobanCell && next < interior.size()) put(next++, 'G');
  for (; next < interior.size(); ++next) {
    const double u = rng.uniform();
    if (variant == Variant::SokobanCell && u < 0.3) {
      put(next, 'P');
    } else if (u > 0.85) {
      put(next, '#');
    } else {
      put(next, '.');
    }
  }
  return map;
}

}  // namespace foilscope
