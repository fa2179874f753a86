#include "foilscope/model.hpp"

#include <numeric>

#include "foilscope/errors.hpp"

namespace foilscope {

std::vector<ActionIndex> BlackBoxModel::exploration_actions() const {
  std::vector<ActionIndex> out(actions().size());
  std::iota(out.begin(), out.end(), 0);
  return out;
}

std::optional<ActionIndex> BlackBoxModel::find_action(
    std::string_view label) const {
  for (const ActionId& a : actions()) {
    if (a.label == label) return a.index;
  }
  return std::nullopt;
}

const std::string& BlackBoxModel::action_label(ActionIndex action) const {
  check_action(action);
  return actions()[static_cast<std::size_t>(action)].label;
}

void BlackBoxModel::check_action(ActionIndex action) const {
  if (action < 0 || static_cast<std::size_t>(action) >= actions().size()) {
    throw ContractViolation("unknown action index " + std::to_string(action));
  }
}

TransitionOutcome CountingModel::simulate(StateHandle state,
                                          ActionIndex action) const {
  ++calls_;
  return inner_.simulate(state, action);
}

double Trajectory::total_cost() const {
  return std::accumulate(step_costs.begin(), step_costs.end(), 0.0);
}

Trajectory execute_sequence(const BlackBoxModel& model, StateHandle initial,
                            std::span<const ActionIndex> actions) {
  if (!initial.is_live()) {
    throw ContractViolation("execute_sequence needs a live initial state");
  }
  Trajectory t;
  t.states.push_back(initial);
  StateHandle s = initial;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const TransitionOutcome out = model.simulate(s, actions[i]);
    t.states.push_back(out.next);
    t.step_costs.push_back(out.cost);
    if (out.failed()) {
      t.terminated_at = i;
      break;
    }
    s = out.next;
  }
  return t;
}

GoalCompiledModel::GoalCompiledModel(std::shared_ptr<const BlackBoxModel> base,
                                     GoalTest goals)
    : base_(std::move(base)), goals_(std::move(goals)) {
  const auto base_actions = base_->actions();
  actions_.assign(base_actions.begin(), base_actions.end());
  goal_action_ = static_cast<ActionIndex>(actions_.size());
  actions_.push_back(ActionId{std::string(kAchieveGoal), goal_action_});
}

TransitionOutcome GoalCompiledModel::simulate(StateHandle state,
                                              ActionIndex action) const {
  check_action(action);
  if (state.is_failure()) return {StateHandle::failure(), 0.0};
  if (state.is_goal_end()) return {StateHandle::failure(), 0.0};
  if (action == goal_action_) {
    return {goals_(state) ? StateHandle::goal_end() : StateHandle::failure(),
            0.0};
  }
  return base_->simulate(state, action);
}

std::vector<ActionIndex> GoalCompiledModel::exploration_actions() const {
  return base_->exploration_actions();
}

CompiledQuery compile_goal_action(std::shared_ptr<const BlackBoxModel> model,
                                  const ContrastiveQuery& query) {
  auto compiled = std::make_shared<const GoalCompiledModel>(model, query.goals);
  ContrastiveQuery q = query;
  q.plan.push_back(compiled->goal_action());
  q.foil.push_back(compiled->goal_action());
  return {std::move(compiled), std::move(q)};
}

QueryKind classify_compiled(const GoalCompiledModel& model,
                            const ContrastiveQuery& compiled) {
  if (compiled.plan.size() < 2 || compiled.foil.size() < 2) {
    throw ContractViolation("plan and foil must be nonempty");
  }
  const Trajectory plan = execute_sequence(model, compiled.initial, compiled.plan);
  if (!plan.valid()) {
    throw InvalidPlan("the agent's plan fails at step " +
                      std::to_string(*plan.terminated_at));
  }
  const Trajectory foil = execute_sequence(model, compiled.initial, compiled.foil);
  if (!foil.valid()) {
    const std::size_t i = *foil.terminated_at;
    return InvalidFoil{i, foil.states[i], compiled.foil[i]};
  }
  const double plan_cost = plan.total_cost();
  const double foil_cost = foil.total_cost();
  if (foil_cost > plan_cost) return CostlierFoil{plan_cost, foil_cost};
  return FoilPreferred{plan_cost, foil_cost};
}

QueryKind classify_query(std::shared_ptr<const BlackBoxModel> model,
                         const ContrastiveQuery& query) {
  const CompiledQuery c = compile_goal_action(std::move(model), query);
  return classify_compiled(*c.model, c.query);
}

}  // namespace foilscope
