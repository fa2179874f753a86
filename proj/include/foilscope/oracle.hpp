#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "foilscope/concepts.hpp"
#include "foilscope/cost_search.hpp"
#include "foilscope/environments.hpp"
#include "foilscope/model.hpp"

namespace foilscope {

inline constexpr std::size_t kDefaultOracleRadius = 12;
inline constexpr std::size_t kDefaultOracleStateCap = 200000;

class OracleLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Live states within `radius` exploration steps of an anchor, ascending.
std::vector<StateHandle> enumerate_local_states(const BlackBoxModel& model,
                                                std::span<const StateHandle> anchors,
                                                std::size_t radius = kDefaultOracleRadius,
                                                std::size_t max_states = kDefaultOracleStateCap);

/// Concepts present in every local state where `action` executes. Empty
/// optional when the action executes nowhere in the region.
std::optional<std::vector<ConceptIndex>> true_preconditions(const BlackBoxModel& model,
                                                            const ConceptVocabulary& vocab,
                                                            ActionIndex action,
                                                            std::span<const StateHandle> states);

/// Minimum cost of `action` over executable local states containing `subset`.
std::optional<double> true_abstract_cost(const BlackBoxModel& model,
                                         const ConceptVocabulary& vocab,
                                         std::span<const ConceptIndex> subset,
                                         ActionIndex action,
                                         std::span<const StateHandle> states);

/// Every executable state of the region as a cost batch with exact reports.
CostBatch exhaustive_cost_batch(const BlackBoxModel& model, const ConceptVocabulary& vocab,
                                ActionIndex action, std::span<const StateHandle> states);

// ---------------------------------------------------------------------------
// Symbolic approximations

struct SymbolicStep {
  ConceptVector next;
  double cost = 0.0;
};

/// A model over concept vectors. `step` returns nothing where the action is
/// not applicable; a state is a goal when it contains every goal concept.
struct SymbolicModel {
  std::size_t concept_count = 0;
  std::function<std::optional<SymbolicStep>(const ConceptVector&, ActionIndex)> step;
  ConceptVector goal;
};

/// Concept labelling of concrete states used for the check.
using Labelling = std::function<ConceptVector(StateHandle)>;

struct ApproximationViolation {
  StateHandle state;
  /// -1 for goal-condition violations.
  ActionIndex action = -1;
  /// 'a' dynamics, 'b' cost, 'c' goal.
  char condition = 'a';
};

struct ApproximationReport {
  std::size_t states_checked = 0;
  std::vector<ApproximationViolation> violations;

  bool ok() const { return violations.empty(); }
};

/// Checks the three local-approximation conditions state by state: symbolic
/// dynamics match the labelled successor (or both fail), symbolic cost equals
/// the true cost, and the goal concepts are the intersection of the labels of
/// the local goal states and pick out exactly those states.
ApproximationReport verify_local_approximation(const SymbolicModel& symbolic,
                                               const BlackBoxModel& model,
                                               std::span<const StateHandle> states,
                                               const Labelling& label, const GoalTest& goals);

struct TrivialApproximation {
  SymbolicModel model;
  /// One indicator per local state plus a final goal indicator.
  Labelling label;
  std::vector<StateHandle> states;
};

/// One indicator concept per local state, plus one marking goal states, with
/// the transition and cost tables copied from the model.
TrivialApproximation construct_trivial_approximation(const BlackBoxModel& model,
                                                     std::span<const StateHandle> states,
                                                     const GoalTest& goals);

/// Cost of running `actions` symbolically from `start`; empty when a step is
/// not applicable.
std::optional<double> symbolic_sequence_cost(const SymbolicModel& model, ConceptVector start,
                                             std::span<const ActionIndex> actions);

// ---------------------------------------------------------------------------
// Random fixtures

/// A random sokoban map of the given variant with interior walls, one box, a
/// target and the variant's special cells. Sides lie in [4, max_side].
GridMap random_sokoban_map(Rng& rng, Variant variant, int max_side = 6);

}  // namespace foilscope
