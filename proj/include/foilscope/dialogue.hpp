#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "foilscope/concepts.hpp"
#include "foilscope/cost_search.hpp"
#include "foilscope/environments.hpp"
#include "foilscope/model.hpp"
#include "foilscope/precondition_search.hpp"
#include "foilscope/sampler.hpp"

namespace foilscope {

inline constexpr double kDefaultThreshold = 0.5;
inline constexpr int kSessionFormatVersion = 1;

struct SessionConfig {
  int walk_length = kDefaultWalkLength;
  std::size_t precondition_budget = kDefaultPreconditionBudget;
  std::size_t cost_budget = kDefaultCostBudget;
  double kappa = kDefaultKappa;
  double prior = kDefaultPrior;
  double threshold = kDefaultThreshold;
  /// Detector rates applied to every concept.
  DetectorRates detector;
};

struct MissingPrecondition {
  std::string concept_name;
  std::string fail_action;
  std::size_t fail_index = 0;
  double confidence = 0.0;
  /// Posterior of the returned concept after each raw sample (prior first).
  std::vector<double> trace;
};

struct CostEntryView {
  std::size_t step_index = 0;
  std::string action;
  std::vector<std::string> concepts;
  double min_cost = 0.0;
  double confidence = 0.0;
};

struct CostAbstraction {
  std::vector<CostEntryView> entries;
  double total = 0.0;
  double plan_cost = 0.0;
  std::size_t conc_limit = 0;
};

struct FoilPreferredView {
  double plan_cost = 0.0;
  double foil_cost = 0.0;
};

struct InsufficientVocabulary {
  /// "precondition" or "cost".
  std::string phase;
};

using ExplanationBody =
    std::variant<MissingPrecondition, CostAbstraction, FoilPreferredView, InsufficientVocabulary>;

struct Explanation {
  ExplanationBody body;
  /// Lowest confidence the explanation relies on; 1 for answers that need none.
  double confidence = 1.0;
  bool threshold_met = true;
  double threshold = kDefaultThreshold;
};

/// Template text. Explanations below the threshold get an advisory prefix and
/// never the bare template.
std::string render_text(const Explanation& explanation);

nlohmann::ordered_json explanation_to_json(const Explanation& explanation);
Explanation explanation_from_json(const nlohmann::ordered_json& j);

struct HistoryEntry {
  std::vector<std::string> foil;
  Explanation explanation;
};

/// Everything needed to rebuild a session from scratch.
struct SessionSpec {
  std::string id;
  std::string map_id;
  std::string map_text;
  std::optional<Variant> variant_override;
  /// Base concepts kept from the environment vocabulary; empty keeps all.
  std::vector<std::string> base_concepts;
  std::vector<std::string> plan;
  std::uint64_t seed = 0;
  SessionConfig config;
};

/// One explanatory dialogue over a fixed map, vocabulary and plan. Each foil
/// is explained with a seed derived from the session seed and its position in
/// the history, so replaying the foils reproduces every explanation.
class Session {
 public:
  /// Throws ParseError for bad maps or mnemonics and InvalidPlan when the
  /// plan does not reach the goal.
  explicit Session(SessionSpec spec);

  const SessionSpec& spec() const { return spec_; }
  const GridEnvironment& environment() const { return *env_; }
  const ConceptVocabulary& vocabulary() const { return vocab_; }
  const std::vector<ActionIndex>& plan() const { return plan_; }
  const std::vector<HistoryEntry>& history() const { return history_; }

  /// Mnemonics to action indices; ParseError names the offending token.
  std::vector<ActionIndex> parse_foil(const std::vector<std::string>& labels) const;

  const Explanation& explain(const std::vector<std::string>& foil);

  nlohmann::ordered_json to_json() const;
  /// Rebuilds the session and replays its foils; the stored history is not
  /// trusted.
  static Session replay(const nlohmann::ordered_json& j);

 private:
  Explanation run(const std::vector<ActionIndex>& foil, std::uint64_t seed) const;

  SessionSpec spec_;
  std::shared_ptr<GridEnvironment> env_;
  ConceptVocabulary vocab_;
  std::vector<ActionIndex> plan_;
  std::vector<HistoryEntry> history_;
};

/// Keeps only the named base concepts (all when `keep` is empty) and adds
/// their negations. Unknown names throw ParseError.
ConceptVocabulary restricted_vocabulary(const GridEnvironment& env,
                                        const std::vector<std::string>& keep);

std::string format_number(double v);

nlohmann::ordered_json session_config_to_json(const SessionConfig& config);
/// Missing keys keep the values from `defaults`.
SessionConfig session_config_from_json(const nlohmann::ordered_json& j,
                                       SessionConfig defaults = {});
/// Throws ContractViolation for out-of-range rates, kappa, prior or threshold.
void check_session_config(const SessionConfig& config);

/// Live states along the plan and foil trajectories, first visit order.
std::vector<StateHandle> query_anchors(const GoalCompiledModel& model,
                                       const ContrastiveQuery& compiled);

/// The searches a session runs, exposed so experiments use the same setup.
/// Sampler and detector noise streams are derived from `seed`.
PreconditionResult run_precondition_search(const GoalCompiledModel& model,
                                           const ConceptVocabulary& vocab,
                                           const ContrastiveQuery& compiled,
                                           const InvalidFoil& failure,
                                           const SessionConfig& config, std::uint64_t seed);
CostSearchResult run_cost_search(const GoalCompiledModel& model, const ConceptVocabulary& vocab,
                                 const ContrastiveQuery& compiled, const SessionConfig& config,
                                 std::uint64_t seed);

}  // namespace foilscope
