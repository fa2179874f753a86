#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace foilscope {

/// Value-like name of a concrete model state. Environments pack their state
/// into 64 bits; the two highest values are reserved.
class StateHandle {
 public:
  constexpr StateHandle() = default;
  constexpr explicit StateHandle(std::uint64_t raw) : raw_(raw) {}

  static constexpr StateHandle failure() { return StateHandle(kFailure); }
  /// Reached by `achieve-goal` from a goal state.
  static constexpr StateHandle goal_end() { return StateHandle(kGoalEnd); }

  constexpr std::uint64_t raw() const { return raw_; }
  constexpr bool is_failure() const { return raw_ == kFailure; }
  constexpr bool is_goal_end() const { return raw_ == kGoalEnd; }
  constexpr bool is_live() const { return raw_ < kGoalEnd; }

  friend constexpr bool operator==(StateHandle, StateHandle) = default;
  friend constexpr auto operator<=>(StateHandle, StateHandle) = default;

 private:
  static constexpr std::uint64_t kFailure = UINT64_MAX;
  static constexpr std::uint64_t kGoalEnd = UINT64_MAX - 1;
  std::uint64_t raw_ = kFailure;
};

struct StateHandleHash {
  std::size_t operator()(StateHandle s) const noexcept {
    return std::hash<std::uint64_t>{}(s.raw());
  }
};

using ActionIndex = int;

struct ActionId {
  std::string label;
  ActionIndex index = 0;
};

struct TransitionOutcome {
  StateHandle next;
  double cost = 0.0;

  bool failed() const { return next.is_failure(); }
};

/// The agent's internal deterministic model <S, A, T, C> with ⊥.
class BlackBoxModel {
 public:
  virtual ~BlackBoxModel() = default;

  virtual std::span<const ActionId> actions() const = 0;
  /// Simulating from ⊥ yields ⊥ at cost 0. Unknown action index throws
  /// ContractViolation.
  virtual TransitionOutcome simulate(StateHandle state,
                                     ActionIndex action) const = 0;

  /// Actions random walks and region enumeration may take. Synthetic
  /// query-only actions are excluded.
  virtual std::vector<ActionIndex> exploration_actions() const;

  /// Looks up an action by mnemonic.
  std::optional<ActionIndex> find_action(std::string_view label) const;
  const std::string& action_label(ActionIndex action) const;

 protected:
  void check_action(ActionIndex action) const;
};

/// Forwards to another model and counts simulate calls.
class CountingModel final : public BlackBoxModel {
 public:
  explicit CountingModel(const BlackBoxModel& inner) : inner_(inner) {}

  std::span<const ActionId> actions() const override { return inner_.actions(); }
  TransitionOutcome simulate(StateHandle state,
                             ActionIndex action) const override;
  std::vector<ActionIndex> exploration_actions() const override {
    return inner_.exploration_actions();
  }

  std::uint64_t calls() const { return calls_.load(); }
  void reset() { calls_ = 0; }

 private:
  const BlackBoxModel& inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

struct Trajectory {
  /// initial state, then one entry per executed step; the last entry is ⊥
  /// when the sequence failed.
  std::vector<StateHandle> states;
  std::vector<double> step_costs;
  /// 0-based index of the failing action.
  std::optional<std::size_t> terminated_at;

  double total_cost() const;
  bool valid() const { return !terminated_at.has_value(); }
  StateHandle final_state() const { return states.back(); }
};

Trajectory execute_sequence(const BlackBoxModel& model, StateHandle initial,
                            std::span<const ActionIndex> actions);

using GoalTest = std::function<bool(StateHandle)>;

struct ContrastiveQuery {
  StateHandle initial;
  std::vector<ActionIndex> plan;
  std::vector<ActionIndex> foil;
  GoalTest goals;
};

inline constexpr std::string_view kAchieveGoal = "achieve-goal";

/// Base model plus a synthetic zero-cost `achieve-goal` action that moves
/// goal states to StateHandle::goal_end() and everything else to ⊥.
class GoalCompiledModel final : public BlackBoxModel {
 public:
  GoalCompiledModel(std::shared_ptr<const BlackBoxModel> base, GoalTest goals);

  std::span<const ActionId> actions() const override { return actions_; }
  TransitionOutcome simulate(StateHandle state,
                             ActionIndex action) const override;
  std::vector<ActionIndex> exploration_actions() const override;

  ActionIndex goal_action() const { return goal_action_; }
  const BlackBoxModel& base() const { return *base_; }
  bool is_goal(StateHandle s) const { return s.is_live() && goals_(s); }

 private:
  std::shared_ptr<const BlackBoxModel> base_;
  GoalTest goals_;
  std::vector<ActionId> actions_;
  ActionIndex goal_action_;
};

struct CompiledQuery {
  std::shared_ptr<const GoalCompiledModel> model;
  ContrastiveQuery query;
};

/// Appends `achieve-goal` to both plan and foil.
CompiledQuery compile_goal_action(std::shared_ptr<const BlackBoxModel> model,
                                  const ContrastiveQuery& query);

struct InvalidFoil {
  std::size_t fail_index = 0;
  StateHandle fail_state;
  ActionIndex fail_action = 0;
};

struct CostlierFoil {
  double plan_cost = 0.0;
  double foil_cost = 0.0;
};

struct FoilPreferred {
  double plan_cost = 0.0;
  double foil_cost = 0.0;
};

using QueryKind = std::variant<InvalidFoil, CostlierFoil, FoilPreferred>;

/// Expects an already compiled query (see compile_goal_action). Throws
/// InvalidPlan when the agent's plan fails.
QueryKind classify_compiled(const GoalCompiledModel& model,
                            const ContrastiveQuery& compiled);

/// Compiles the goal action internally.
QueryKind classify_query(std::shared_ptr<const BlackBoxModel> model,
                         const ContrastiveQuery& query);

}  // namespace foilscope
