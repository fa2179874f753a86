#include "foilscope/cost_search.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>

#include "foilscope/confidence.hpp"
#include "foilscope/errors.hpp"

namespace foilscope {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Set of batch sample indices.
class Bits {
 public:
  Bits() = default;
  explicit Bits(std::size_t n, bool fill = false) : words_((n + 63) / 64, 0) {
    if (fill) {
      for (std::size_t i = 0; i < n; ++i) set(i);
    }
  }
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  std::size_t count() const {
    std::size_t n = 0;
    for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }
  /// Size of the intersection.
  std::size_t overlap(const Bits& other) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      n += static_cast<std::size_t>(std::popcount(words_[i] & other.words_[i]));
    }
    return n;
  }
  Bits operator&(const Bits& other) const {
    Bits out = *this;
    for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] &= other.words_[i];
    return out;
  }
  bool any() const {
    return std::any_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w != 0; });
  }

 private:
  std::vector<std::uint64_t> words_;
};

/// Rates and frequency of "every concept in the subset is present", assuming
/// independent detectors and concepts.
struct Conjunction {
  DetectorRates rates;
  double p = 1.0;
};

Conjunction conjunction(std::span<const ConceptIndex> subset, const ObservationModel& obs,
                        const ConceptMarginals& marginals) {
  double tp = 1.0;
  double reported = 1.0;
  double p = 1.0;
  for (ConceptIndex c : subset) {
    const DetectorRates& r = obs.rates(c);
    const double pc = marginals[c];
    tp *= r.true_positive;
    reported *= r.true_positive * pc + r.false_positive * (1.0 - pc);
    p *= pc;
  }
  double fp = 0.0;
  if (p < 1.0) fp = std::clamp((reported - tp * p) / (1.0 - p), 0.0, 1.0);
  return {{tp, fp}, p};
}

/// Per-batch indexes: which samples report each concept and which reach
/// each distinct cost level.
class BatchIndex {
 public:
  BatchIndex(const CostBatch& batch, std::size_t concepts) : batch_(batch) {
    levels_ = batch.costs;
    std::sort(levels_.begin(), levels_.end());
    levels_.erase(std::unique(levels_.begin(), levels_.end()), levels_.end());
    for (double k : levels_) {
      Bits b(batch.size());
      std::size_t n = 0;
      for (std::size_t j = 0; j < batch.size(); ++j) {
        if (batch.costs[j] >= k) {
          b.set(j);
          ++n;
        }
      }
      at_least_.push_back(std::move(b));
      tail_.push_back(static_cast<double>(n) / static_cast<double>(batch.size()));
    }
    reported_.assign(concepts, Bits(batch.size()));
    for (std::size_t j = 0; j < batch.size(); ++j) {
      for (ConceptIndex c : batch.observed[j].true_concepts()) {
        reported_[static_cast<std::size_t>(c)].set(j);
      }
    }
  }

  const CostBatch& batch() const { return batch_; }
  Bits everything() const { return Bits(batch_.size(), true); }
  const Bits& reported(ConceptIndex c) const { return reported_.at(static_cast<std::size_t>(c)); }

  SubsetEstimate score(const Bits& support, std::span<const ConceptIndex> subset,
                       const ObservationModel& obs, const ConceptMarginals& marginals,
                       double prior) const {
    const Conjunction conj = conjunction(subset, obs, marginals);
    const std::size_t total = support.count();
    if (total == 0) throw ContractViolation("subset scored without support");
    SubsetEstimate est;
    est.support = total;
    // Walk the cost levels from the top; the first supported level whose
    // posterior holds at 1/2 or more is the answer. The lowest supported
    // level always qualifies as the fallback.
    for (std::size_t li = levels_.size(); li-- > 0;) {
      const std::size_t hi = support.overlap(at_least_[li]);
      if (hi == 0) continue;
      const std::size_t lo = total - hi;
      const double lr_hi = cost_log_likelihood_ratio(conj.rates, conj.p, tail_[li], true);
      const double lr_lo = cost_log_likelihood_ratio(conj.rates, conj.p, tail_[li], false);
      double odds = log_odds(prior);
      if (lo > 0 && lr_lo == -kInf) {
        odds = -kInf;
      } else if (lr_hi == kInf) {
        odds = kInf;
      } else {
        odds += static_cast<double>(hi) * lr_hi;
        if (lo > 0) odds += static_cast<double>(lo) * lr_lo;
      }
      est.min_cost = levels_[li];
      est.confidence_log_odds = odds;
      est.confidence = from_log_odds(odds);
      if (odds >= 0.0 || lo == 0) break;
    }
    return est;
  }

 private:
  const CostBatch& batch_;
  std::vector<double> levels_;
  std::vector<Bits> at_least_;
  std::vector<double> tail_;
  std::vector<Bits> reported_;
};

/// True when `a` should replace `b` (cost first, then confidence).
bool better(const SubsetEstimate& a, const SubsetEstimate& b) {
  if (a.min_cost != b.min_cost) return a.min_cost > b.min_cost;
  return a.confidence_log_odds > b.confidence_log_odds;
}

/// Scoring context for one batch.
class Scorer {
 public:
  Scorer(const CostBatch& batch, std::size_t concepts, const ObservationModel& obs,
         const ConceptMarginals& marginals, double prior)
      : index_(batch, concepts), obs_(obs), marginals_(marginals), prior_(prior) {}

  SubsetEstimate operator()(const std::vector<ConceptIndex>& subset, const Bits& support) const {
    return index_.score(support, subset, obs_, marginals_, prior_);
  }

  const BatchIndex& index() const { return index_; }

 private:
  BatchIndex index_;
  const ObservationModel& obs_;
  const ConceptMarginals& marginals_;
  double prior_;
};

struct Candidate {
  std::vector<ConceptIndex> subset;
  SubsetEstimate estimate;
};

/// Visits every supported subset of `pool` with exactly `size` members in
/// lexicographic order. Returns false when none exists.
template <typename Visit>
bool for_each_supported(const BatchIndex& index, const std::vector<ConceptIndex>& pool,
                        std::size_t size, Visit&& visit) {
  if (index.batch().size() == 0) return false;
  std::vector<ConceptIndex> current;
  bool any = false;
  auto rec = [&](auto&& self, std::size_t from, const Bits& support) -> void {
    if (current.size() == size) {
      any = true;
      visit(current, support);
      return;
    }
    const std::size_t need = size - current.size();
    for (std::size_t i = from; i + need <= pool.size(); ++i) {
      const Bits next = support & index.reported(pool[i]);
      if (!next.any()) continue;
      current.push_back(pool[i]);
      self(self, i + 1, next);
      current.pop_back();
    }
  };
  rec(rec, 0, index.everything());
  return any;
}

/// Scans subsets of one size; updates `best` and reports whether any had support.
bool scan_size(const Scorer& scorer, const std::vector<ConceptIndex>& pool, std::size_t size,
               std::optional<Candidate>& best) {
  return for_each_supported(scorer.index(), pool, size,
                            [&](const std::vector<ConceptIndex>& subset, const Bits& support) {
                              const SubsetEstimate e = scorer(subset, support);
                              if (!best || better(e, best->estimate)) best = Candidate{subset, e};
                            });
}

CostBatch draw_batch(const BlackBoxModel& model, const ConceptVocabulary& vocab,
                     const SamplerConfig& base, ActionIndex action, const ObservationModel& obs,
                     std::uint64_t observation_seed) {
  SamplerConfig cfg = base;
  cfg.seed = derive_seed(base.seed, static_cast<std::uint64_t>(action));
  CostBatch batch;
  batch.action = action;
  const auto samples = sample_executable(model, cfg, action, &batch.stats);
  Rng noise(derive_seed(observation_seed, static_cast<std::uint64_t>(action)));
  for (const ExecutableSample& s : samples) {
    ConceptVector truth = vocab.evaluate(s.state);
    batch.observed.push_back(obs.is_exact() ? truth : observe_vector(truth, obs, noise));
    batch.truth.push_back(std::move(truth));
    batch.costs.push_back(s.outcome.cost);
  }
  return batch;
}

}  // namespace

std::optional<std::pair<double, std::size_t>> abstract_cost_estimate(
    const CostBatch& batch, std::span<const ConceptIndex> subset) {
  std::optional<double> low;
  std::size_t support = 0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (!batch.observed[j].contains(subset)) continue;
    ++support;
    low = low ? std::min(*low, batch.costs[j]) : batch.costs[j];
  }
  if (!low) return std::nullopt;
  return std::pair{*low, support};
}

std::optional<SubsetEstimate> estimate_subset(const CostBatch& batch,
                                              std::span<const ConceptIndex> subset,
                                              const ObservationModel& observation,
                                              const ConceptMarginals& marginals, double prior) {
  const BatchIndex index(batch, observation.size());
  Bits support = index.everything();
  for (ConceptIndex c : subset) support = support & index.reported(c);
  if (batch.size() == 0 || !support.any()) return std::nullopt;
  return index.score(support, subset, observation, marginals, prior);
}

std::optional<std::pair<std::vector<ConceptIndex>, SubsetEstimate>> find_min_conc_set(
    const ConceptVector& concepts_at_step, const CostBatch& batch, std::size_t conc_limit,
    const ObservationModel& observation, const ConceptMarginals& marginals, double prior) {
  if (conc_limit < 1) throw ContractViolation("conc_limit must be at least 1");
  const Scorer scorer(batch, observation.size(), observation, marginals, prior);
  const std::vector<ConceptIndex> pool = concepts_at_step.true_concepts();
  std::optional<Candidate> best;
  for (std::size_t size = 0; size <= std::min(conc_limit, pool.size()); ++size) {
    if (!scan_size(scorer, pool, size, best)) break;
  }
  if (!best) return std::nullopt;
  return std::pair{best->subset, best->estimate};
}

CostSearchResult find_cost_abstraction(const GoalCompiledModel& model,
                                       const ConceptVocabulary& vocab,
                                       const ContrastiveQuery& compiled,
                                       const CostSearchConfig& config) {
  const Trajectory plan = execute_sequence(model, compiled.initial, compiled.plan);
  if (!plan.valid()) throw InvalidPlan("the plan fails in the model");
  const Trajectory foil = execute_sequence(model, compiled.initial, compiled.foil);
  if (!foil.valid()) throw ContractViolation("cost search needs an executable foil");
  const double plan_cost = plan.total_cost();
  if (!(foil.total_cost() > plan_cost)) {
    throw ContractViolation("cost search needs a foil costlier than the plan");
  }
  const ObservationModel obs =
      config.observation.size() == 0 ? ObservationModel::exact(vocab.size()) : config.observation;
  if (obs.size() != vocab.size()) {
    throw ContractViolation("observation model must cover the vocabulary");
  }

  SamplerConfig sampler = config.sampler;
  sampler.anchors.clear();
  // Plan states join the foil states as anchors so the cheaper variants the
  // plan passes through are in reach.
  std::vector<StateHandle> visited = foil.states;
  visited.insert(visited.end(), plan.states.begin(), plan.states.end());
  for (StateHandle s : visited) {
    if (s.is_live() && std::find(sampler.anchors.begin(), sampler.anchors.end(), s) ==
                           sampler.anchors.end()) {
      sampler.anchors.push_back(s);
    }
  }
  const ConceptMarginals marginals =
      config.marginals ? *config.marginals : estimate_local_marginals(model, vocab, sampler);
  if (marginals.p.size() != vocab.size()) {
    throw ContractViolation("marginals must cover the vocabulary");
  }

  CostSearchResult result;
  // One batch per distinct action, shared by every step that uses it.
  std::map<ActionIndex, std::size_t> batch_of;
  for (ActionIndex a : compiled.foil) {
    if (batch_of.contains(a)) continue;
    batch_of[a] = result.batches.size();
    result.batches.push_back(draw_batch(model, vocab, sampler, a, obs, config.observation_seed));
    result.samples_drawn += result.batches.back().stats.emitted;
  }
  std::vector<std::unique_ptr<Scorer>> scorers;
  for (const CostBatch& b : result.batches) {
    scorers.push_back(
        std::make_unique<Scorer>(b, vocab.size(), obs, marginals, config.prior));
  }

  const std::size_t steps = compiled.foil.size();
  std::vector<std::vector<ConceptIndex>> pools(steps);
  std::vector<std::optional<Candidate>> best(steps);
  std::vector<bool> exhausted(steps, false);
  // Steps sharing an action and a concept set share their per-size scans.
  struct Scan {
    bool supported = false;
    std::optional<Candidate> top;
  };
  std::map<std::pair<ActionIndex, std::vector<ConceptIndex>>, std::map<std::size_t, Scan>> memo;
  auto scan = [&](std::size_t i, std::size_t size) {
    const ActionIndex a = compiled.foil[i];
    Scan fresh;
    Scan* hit = nullptr;
    if (config.memoize) {
      auto& sizes = memo[{a, pools[i]}];
      if (auto it = sizes.find(size); it != sizes.end()) hit = &it->second;
    }
    if (hit == nullptr) {
      fresh.supported = scan_size(*scorers[batch_of[a]], pools[i], size, fresh.top);
      if (config.memoize) hit = &(memo[{a, pools[i]}][size] = fresh);
    }
    const Scan& r = hit != nullptr ? *hit : fresh;
    if (r.top && (!best[i] || better(r.top->estimate, best[i]->estimate))) best[i] = r.top;
    return r.supported;
  };
  std::size_t widest = 0;
  for (std::size_t i = 0; i < steps; ++i) {
    pools[i] = vocab.evaluate(foil.states[i]).true_concepts();
    widest = std::max(widest, pools[i].size());
    // The empty subset (no concept) seeds every step.
    exhausted[i] = !scan(i, 0);
  }

  const std::size_t max_limit =
      std::min(config.max_conc_limit.value_or(vocab.size()), std::max<std::size_t>(widest, 1));
  auto entries_now = [&] {
    std::vector<CostAbstractionEntry> entries;
    for (std::size_t i = 0; i < steps; ++i) {
      CostAbstractionEntry e;
      e.step_index = i;
      e.action = compiled.foil[i];
      if (best[i]) {
        e.subset = best[i]->subset;
        e.min_cost = best[i]->estimate.min_cost;
        e.confidence = best[i]->estimate.confidence;
        e.support = best[i]->estimate.support;
      }
      entries.push_back(std::move(e));
    }
    return entries;
  };

  for (std::size_t limit = 1; limit <= max_limit; ++limit) {
    bool grew = false;
    for (std::size_t i = 0; i < steps; ++i) {
      if (exhausted[i] || limit > pools[i].size()) continue;
      if (scan(i, limit)) {
        grew = true;
      } else {
        exhausted[i] = true;  // supersets of unsupported subsets are unsupported
      }
    }
    result.last_entries = entries_now();
    double total = 0.0;
    for (const auto& e : result.last_entries) total += e.min_cost;
    if (total > plan_cost) {
      result.outcome = CostExplanation{result.last_entries, total, plan_cost, limit};
      return result;
    }
    if (!grew) break;
  }
  if (result.last_entries.empty()) result.last_entries = entries_now();
  result.outcome = VocabularyInsufficient{result.samples_drawn};
  return result;
}

}  // namespace foilscope
