#include "foilscope/precondition_search.hpp"

#include <algorithm>
#include <limits>

#include "foilscope/confidence.hpp"
#include "foilscope/errors.hpp"

namespace foilscope {

namespace {

constexpr std::uint64_t kMarginalStream = 0x6d617267;  // "marg"

std::vector<ConceptIndex> initial_hypotheses(const BlackBoxModel& model,
                                             const ConceptVocabulary& vocab,
                                             StateHandle fail_state, ActionIndex fail_action) {
  if (!fail_state.is_live()) throw ContractViolation("failing state must be live");
  if (!model.simulate(fail_state, fail_action).failed()) {
    throw ContractViolation("the action does not fail in the given state");
  }
  const ConceptVector present = vocab.evaluate(fail_state);
  std::vector<ConceptIndex> out;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto c = static_cast<ConceptIndex>(i);
    if (!present.test(c)) out.push_back(c);
  }
  return out;
}

/// Shared loop: feeds each executable sample's true concept vector to
/// `update`, which edits posteriors and liveness in place.
template <typename Update>
void run_search(const BlackBoxModel& model, const ConceptVocabulary& vocab,
                ActionIndex fail_action, const SamplerConfig& sampler_config,
                std::vector<double>& posterior, std::vector<bool>& alive,
                PreconditionResult& result, Update&& update) {
  auto record = [&] {
    result.trace.push_back(posterior);
    result.alive_count.push_back(
        static_cast<std::size_t>(std::count(alive.begin(), alive.end(), true)));
  };
  record();
  StateSampler sampler(model, sampler_config);
  while (auto s = sampler.next()) {
    if (!model.simulate(*s, fail_action).failed()) {
      ++result.executable_samples;
      update(vocab.evaluate(*s));
    }
    record();
  }
  result.stats = sampler.stats();
  for (std::size_t j = 0; j < alive.size(); ++j) {
    if (alive[j]) result.survivors.push_back(result.hypotheses[j]);
  }
}

}  // namespace

std::optional<ConceptIndex> PreconditionResult::concept_id() const {
  if (const auto* f = std::get_if<PreconditionFound>(&outcome)) return f->concept_id;
  return std::nullopt;
}

std::optional<std::size_t> PreconditionResult::hypothesis_slot(ConceptIndex c) const {
  auto it = std::lower_bound(hypotheses.begin(), hypotheses.end(), c);
  if (it == hypotheses.end() || *it != c) return std::nullopt;
  return static_cast<std::size_t>(it - hypotheses.begin());
}

PreconditionResult find_missing_precondition(const BlackBoxModel& model,
                                             const ConceptVocabulary& vocab,
                                             StateHandle fail_state, ActionIndex fail_action,
                                             const SamplerConfig& sampler) {
  PreconditionResult result;
  result.hypotheses = initial_hypotheses(model, vocab, fail_state, fail_action);
  std::vector<double> posterior(result.hypotheses.size(), 1.0);
  std::vector<bool> alive(result.hypotheses.size(), true);
  run_search(model, vocab, fail_action, sampler, posterior, alive, result,
             [&](const ConceptVector& seen) {
               for (std::size_t j = 0; j < alive.size(); ++j) {
                 if (alive[j] && !seen.test(result.hypotheses[j])) {
                   alive[j] = false;
                   posterior[j] = 0.0;
                 }
               }
             });
  const std::size_t used = result.stats.emitted;
  if (result.survivors.empty()) {
    result.outcome = VocabularyInsufficient{used};
  } else {
    result.outcome = PreconditionFound{result.survivors.front(), std::nullopt, used};
  }
  return result;
}

PreconditionResult find_missing_precondition_probabilistic(
    const BlackBoxModel& model, const ConceptVocabulary& vocab, StateHandle fail_state,
    ActionIndex fail_action, const ProbabilisticPreconditionConfig& config) {
  if (!(config.prior > 0.0 && config.prior < 1.0)) {
    throw ContractViolation("prior must lie strictly between 0 and 1");
  }
  if (!(config.kappa >= 0.0 && config.kappa < 1.0)) {
    throw ContractViolation("kappa must lie in [0, 1)");
  }
  if (config.observation.size() != vocab.size() || config.marginals.p.size() != vocab.size()) {
    throw ContractViolation("observation model and marginals must cover the vocabulary");
  }
  PreconditionResult result;
  result.hypotheses = initial_hypotheses(model, vocab, fail_state, fail_action);
  std::vector<double> posterior(result.hypotheses.size(), config.prior);
  std::vector<double> lodds(result.hypotheses.size(), log_odds(config.prior));
  std::vector<bool> alive(result.hypotheses.size(), true);
  const double kill_below = config.kappa > 0.0 ? log_odds(config.kappa)
                                               : -std::numeric_limits<double>::infinity();
  Rng noise(config.observation_seed);
  run_search(model, vocab, fail_action, config.sampler, posterior, alive, result,
             [&](const ConceptVector& truth) {
               const ConceptVector seen = observe_vector(truth, config.observation, noise);
               for (std::size_t j = 0; j < alive.size(); ++j) {
                 if (!alive[j]) continue;
                 const ConceptIndex c = result.hypotheses[j];
                 const Observation o = seen.test(c) ? Observation::Present : Observation::Absent;
                 lodds[j] += precondition_log_likelihood_ratio(o, config.observation.rates(c),
                                                               config.marginals[c]);
                 posterior[j] = from_log_odds(lodds[j]);
                 if (lodds[j] < kill_below || posterior[j] == 0.0) {
                   alive[j] = false;
                   posterior[j] = 0.0;
                 }
               }
             });
  const std::size_t used = result.stats.emitted;
  if (result.survivors.empty()) {
    result.outcome = VocabularyInsufficient{used};
    return result;
  }
  // Compare in log-odds: distinct posteriors can round to the same double.
  std::size_t best = alive.size();
  for (std::size_t j = 0; j < alive.size(); ++j) {
    if (alive[j] && (best == alive.size() || lodds[j] > lodds[best])) best = j;
  }
  result.outcome = PreconditionFound{result.hypotheses[best], posterior[best], used};
  return result;
}

ConceptMarginals estimate_local_marginals(const BlackBoxModel& model,
                                          const ConceptVocabulary& vocab,
                                          const SamplerConfig& sampler, std::size_t count) {
  SamplerConfig cfg = sampler;
  cfg.budget = count;
  cfg.seed = derive_seed(sampler.seed, kMarginalStream);
  const auto states = sample_states(model, cfg);
  return estimate_marginals(vocab, states);
}

}  // namespace foilscope
