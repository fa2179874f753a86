#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "foilscope/concepts.hpp"
#include "foilscope/model.hpp"
#include "foilscope/precondition_search.hpp"
#include "foilscope/sampler.hpp"

namespace foilscope {

/// Executable samples of one action, shared by every foil step that uses it.
struct CostBatch {
  ActionIndex action = 0;
  std::vector<ConceptVector> truth;
  /// Detector reports; equal to `truth` under exact detectors.
  std::vector<ConceptVector> observed;
  std::vector<double> costs;
  SampleStats stats;

  std::size_t size() const { return costs.size(); }
};

struct SubsetEstimate {
  /// Highest threshold k whose posterior stays at or above 1/2. With exact
  /// detectors this is the minimum observed cost over supporting samples.
  double min_cost = 0.0;
  double confidence = 0.0;
  double confidence_log_odds = 0.0;
  std::size_t support = 0;
};

/// Minimum cost over the batch samples whose report contains `subset`.
/// Empty when nothing supports it.
std::optional<std::pair<double, std::size_t>> abstract_cost_estimate(
    const CostBatch& batch, std::span<const ConceptIndex> subset);

/// Scores a subset with the cost posterior. `observation` and `marginals` give
/// the per-concept detector rates and frequencies; a multi-concept subset is
/// treated as one conjunctive detector under independence.
std::optional<SubsetEstimate> estimate_subset(const CostBatch& batch,
                                              std::span<const ConceptIndex> subset,
                                              const ObservationModel& observation,
                                              const ConceptMarginals& marginals,
                                              double prior = kDefaultPrior);

struct CostAbstractionEntry {
  std::size_t step_index = 0;
  ActionIndex action = 0;
  std::vector<ConceptIndex> subset;
  double min_cost = 0.0;
  double confidence = 0.0;
  std::size_t support = 0;
};

struct CostExplanation {
  std::vector<CostAbstractionEntry> entries;
  double total_abstract_cost = 0.0;
  double plan_cost = 0.0;
  std::size_t conc_limit = 0;
};

using CostOutcome = std::variant<CostExplanation, VocabularyInsufficient>;

struct CostSearchConfig {
  /// Anchors are replaced by the foil and plan states; the seed is split per action.
  SamplerConfig sampler{{}, kDefaultWalkLength, kDefaultCostBudget, 0};
  /// Empty means exact detectors.
  ObservationModel observation;
  double prior = kDefaultPrior;
  /// Empty means: estimate from a separate run from the same anchors.
  std::optional<ConceptMarginals> marginals;
  std::uint64_t observation_seed = 0;
  bool memoize = true;
  /// Upper bound on the subset size; defaults to the vocabulary size.
  std::optional<std::size_t> max_conc_limit;
};

struct CostSearchResult {
  CostOutcome outcome;
  /// Best entry per step at the last limit tried.
  std::vector<CostAbstractionEntry> last_entries;
  std::vector<CostBatch> batches;
  std::size_t samples_drawn = 0;

  bool found() const { return std::holds_alternative<CostExplanation>(outcome); }
  const CostExplanation* explanation() const { return std::get_if<CostExplanation>(&outcome); }
};

/// Best subset of `concepts_at_step` with at most `conc_limit` members:
/// highest min_cost, then higher confidence, then smaller, then
/// lexicographically first. Empty when nothing has support.
std::optional<std::pair<std::vector<ConceptIndex>, SubsetEstimate>> find_min_conc_set(
    const ConceptVector& concepts_at_step, const CostBatch& batch, std::size_t conc_limit,
    const ObservationModel& observation, const ConceptMarginals& marginals,
    double prior = kDefaultPrior);

/// Greedy search over growing subset sizes until the per-step abstract costs
/// sum above the plan cost. `compiled` must carry the goal action and its foil
/// must be valid and strictly costlier than the plan (ContractViolation
/// otherwise).
CostSearchResult find_cost_abstraction(const GoalCompiledModel& model,
                                       const ConceptVocabulary& vocab,
                                       const ContrastiveQuery& compiled,
                                       const CostSearchConfig& config);

}  // namespace foilscope
