#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "foilscope/concepts.hpp"
#include "foilscope/model.hpp"
#include "foilscope/sampler.hpp"

namespace foilscope {

inline constexpr double kDefaultPrior = 0.5;
inline constexpr double kDefaultKappa = 0.01;
inline constexpr std::size_t kMarginalSampleCount = 2000;

struct PreconditionFound {
  ConceptIndex concept_id = 0;
  /// Posterior of the returned hypothesis; empty in exact mode.
  std::optional<double> posterior;
  std::size_t samples_used = 0;
};

struct VocabularyInsufficient {
  std::size_t samples_used = 0;
};

using PreconditionOutcome = std::variant<PreconditionFound, VocabularyInsufficient>;

struct PreconditionResult {
  PreconditionOutcome outcome;
  /// Concepts absent in the failing state, ascending.
  std::vector<ConceptIndex> hypotheses;
  /// Hypotheses still alive after the last sample, ascending.
  std::vector<ConceptIndex> survivors;
  /// trace[i][j]: posterior of hypotheses[j] after i raw samples (row 0 holds
  /// the priors). Exact mode records 1 for alive and 0 for eliminated.
  std::vector<std::vector<double>> trace;
  /// alive_count[i]: live hypotheses after i raw samples.
  std::vector<std::size_t> alive_count;
  std::size_t executable_samples = 0;
  SampleStats stats;

  bool found() const { return std::holds_alternative<PreconditionFound>(outcome); }
  std::optional<ConceptIndex> concept_id() const;
  /// Index into `hypotheses`, if present.
  std::optional<std::size_t> hypothesis_slot(ConceptIndex c) const;
};

/// Exact elimination: start from the concepts absent in fail_state and keep
/// only those present in every sampled state where fail_action executes.
/// Throws ContractViolation unless fail_action fails at fail_state.
PreconditionResult find_missing_precondition(const BlackBoxModel& model,
                                             const ConceptVocabulary& vocab,
                                             StateHandle fail_state, ActionIndex fail_action,
                                             const SamplerConfig& sampler);

struct ProbabilisticPreconditionConfig {
  SamplerConfig sampler;
  ObservationModel observation;
  double prior = kDefaultPrior;
  double kappa = kDefaultKappa;
  ConceptMarginals marginals;
  /// Seeds the detector noise; independent of the sampler seed.
  std::uint64_t observation_seed = 0;
};

/// Bayesian variant. Each executable sample yields a noisy concept report;
/// every live hypothesis is updated and dropped once its posterior falls
/// below kappa or reaches 0. Returns the live hypothesis with the highest
/// posterior, lowest index on ties.
PreconditionResult find_missing_precondition_probabilistic(
    const BlackBoxModel& model, const ConceptVocabulary& vocab, StateHandle fail_state,
    ActionIndex fail_action, const ProbabilisticPreconditionConfig& config);

/// Concept marginals over a separate random-walk run from the same anchors,
/// evaluated with exact detectors.
ConceptMarginals estimate_local_marginals(const BlackBoxModel& model,
                                          const ConceptVocabulary& vocab,
                                          const SamplerConfig& sampler,
                                          std::size_t count = kMarginalSampleCount);

}  // namespace foilscope
