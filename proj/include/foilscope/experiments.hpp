#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "foilscope/dialogue.hpp"
#include "foilscope/environments.hpp"
#include "foilscope/oracle.hpp"

namespace foilscope {

/// A bundled map/plan/foil triple with the model component it should surface.
struct Scenario {
  std::string id;
  std::string map_id;
  std::string foil_id;
  std::optional<Variant> variant;
  bool cost = false;
  std::string action;
  /// Expected concept set (a single missing precondition, or a cost subset).
  std::vector<std::string> concepts;
  double min_cost = 0.0;
  /// Base concepts whose removal should leave the vocabulary insufficient.
  std::vector<std::string> strip;
};

const std::vector<Scenario>& bundled_scenarios();
const Scenario& find_scenario(const std::string& id);

struct LoadedScenario {
  std::shared_ptr<GridEnvironment> env;
  std::vector<ActionIndex> plan;
  std::vector<ActionIndex> foil;
  CompiledQuery compiled;
};

/// Files live under `maps_dir` as <map>.map, <map>.plan and <map>.<foil>.foil.
LoadedScenario load_scenario(const Scenario& scenario, const std::string& maps_dir);
LoadedScenario load_query(const std::string& map_path, const std::string& plan_path,
                          const std::string& foil_path,
                          std::optional<Variant> variant = std::nullopt);

/// All base concepts except `drop`, plus negations.
ConceptVocabulary vocabulary_without(const GridEnvironment& env,
                                     const std::vector<std::string>& drop);

struct MapCatalogEntry {
  std::string id;
  std::string variant;
  int width = 0;
  int height = 0;
  std::size_t plan_length = 0;
};

/// Maps under `maps_dir` that come with a plan file, sorted by id.
std::vector<MapCatalogEntry> bundled_maps(const std::string& maps_dir);

// ---------------------------------------------------------------------------
// Posterior curves

struct CurveRow {
  std::size_t step = 0;
  double mean = 0.0;
  double std = 0.0;
};

struct CurveResult {
  std::string concept_name;
  std::vector<CurveRow> rows;
  /// Per seed: first raw sample after which only the traced concept is alive.
  std::vector<std::optional<std::size_t>> rivals_gone;
};

/// Traces the posterior of `concept_name` (default: the expected precondition
/// from the map header for the failing action, else the seed-0 answer) over
/// `seeds` runs seeded derive_seed(base_seed, i). Series shorter than the
/// budget are held at their last value. Throws ContractViolation unless the
/// foil is invalid.
CurveResult posterior_curves(const LoadedScenario& scenario, const ConceptVocabulary& vocab,
                             const SessionConfig& config, std::size_t seeds,
                             std::uint64_t base_seed,
                             std::optional<std::string> concept_name = std::nullopt);

std::string curves_csv(const CurveResult& curves);

// ---------------------------------------------------------------------------
// Assumption report

inline constexpr std::size_t kDefaultAssumptionSamples = 5000;
inline constexpr double kDefaultGapFlag = 0.05;

struct AssumptionRow {
  std::string action;
  std::string concept_name;
  double p_executable = 0.0;
  double p_all = 0.0;
  double gap = 0.0;
};

struct AssumptionSummary {
  std::string action;
  std::size_t executable = 0;
  double max_gap = 0.0;
  double mean_gap = 0.0;
  std::string worst_concept;
};

struct AssumptionReport {
  std::size_t samples = 0;
  std::vector<AssumptionRow> rows;
  std::vector<AssumptionSummary> summaries;
  /// Rows whose gap exceeds the flag threshold.
  std::vector<AssumptionRow> flagged;
};

struct AssumptionConfig {
  std::size_t samples = kDefaultAssumptionSamples;
  int walk_length = kDefaultWalkLength;
  std::uint64_t seed = 0;
  double flag_gap = kDefaultGapFlag;
  /// Census of every state the environment can represent. Random walks
  /// (the alternative) oversample the neighbourhood of the plan, which ties
  /// push executability to where the box happens to start.
  bool exhaustive = true;
  /// Adds a concept that is true exactly where this action executes.
  std::optional<std::string> plant_for_action;
};

/// Compares each concept's frequency over states where an action executes
/// with its frequency over all sampled states. Ground-truth precondition and
/// cost concepts of the action, and their complements, are skipped. Walk
/// samples start from the initial state and the plan states.
AssumptionReport assumption_report(const GridEnvironment& env,
                                   const std::vector<ActionIndex>& plan,
                                   const AssumptionConfig& config);

std::string assumption_csv(const AssumptionReport& report);

// ---------------------------------------------------------------------------
// Validation

struct ValidationResult {
  std::size_t radius = 0;
  std::size_t states = 0;
  ApproximationReport report;
  /// Plan/foil orderings checked for preservation under the approximation.
  std::size_t orderings_checked = 0;
  std::size_t orderings_broken = 0;
};

/// Builds the trivial symbolic approximation of the region around the plan
/// and checks it, including that it orders the plan and a set of short
/// action sequences the same way the model does.
ValidationResult validate_environment(const GridEnvironment& env,
                                      const std::vector<ActionIndex>& plan, std::size_t radius,
                                      std::size_t max_foil_length = 3);

}  // namespace foilscope
