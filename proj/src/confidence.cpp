#include "foilscope/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include "foilscope/errors.hpp"
#include "foilscope/rng.hpp"

namespace foilscope {

namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ContractViolation(std::string(what) + " must lie in [0, 1]");
  }
}

void check_rates(const DetectorRates& r) {
  check_probability(r.true_positive, "true positive rate");
  check_probability(r.false_positive, "false positive rate");
}

/// prior * l_h / (prior * l_h + (1 - prior) * l_not). A zero denominator means
/// the observation is impossible under both hypotheses; the prior is kept.
double bayes(double prior, double l_h, double l_not) {
  const double num = prior * l_h;
  const double den = num + (1.0 - prior) * l_not;
  if (den <= 0.0) return prior;
  return std::clamp(num / den, 0.0, 1.0);
}

}  // namespace

double posterior_precondition_positive(double prior, double p_c) {
  check_probability(prior, "prior");
  check_probability(p_c, "concept marginal");
  return bayes(prior, 1.0, p_c);
}

double posterior_precondition_negative_noiseless(double prior) {
  check_probability(prior, "prior");
  return 0.0;
}

double posterior_precondition_noisy(double prior, Observation observation,
                                    const DetectorRates& rates, double p_c) {
  check_probability(prior, "prior");
  check_probability(p_c, "concept marginal");
  check_rates(rates);
  const double tp = rates.true_positive;
  const double fp = rates.false_positive;
  if (observation == Observation::Present) {
    return bayes(prior, tp, tp * p_c + fp * (1.0 - p_c));
  }
  return bayes(prior, 1.0 - tp, (1.0 - tp) * p_c + (1.0 - fp) * (1.0 - p_c));
}

double precondition_log_likelihood_ratio(Observation observation, const DetectorRates& rates,
                                         double p_c) {
  check_probability(p_c, "concept marginal");
  check_rates(rates);
  const double tp = rates.true_positive;
  const double fp = rates.false_positive;
  double l_h = tp;
  double l_not = tp * p_c + fp * (1.0 - p_c);
  if (observation == Observation::Absent) {
    l_h = 1.0 - tp;
    l_not = (1.0 - tp) * p_c + (1.0 - fp) * (1.0 - p_c);
  }
  if (l_h <= 0.0 && l_not <= 0.0) return 0.0;
  return std::log(l_h) - std::log(l_not);
}

double cost_log_likelihood_ratio(const DetectorRates& rates, double p_c, double p_geq_k,
                                 bool at_least_k) {
  check_probability(p_c, "concept marginal");
  check_probability(p_geq_k, "cost tail probability");
  check_rates(rates);
  const double tp = rates.true_positive;
  const double fp = rates.false_positive;
  double l_h = tp * p_c + p_geq_k * fp * (1.0 - p_c);
  double l_not = p_geq_k * (tp * p_c + fp * (1.0 - p_c));
  if (!at_least_k) {
    l_h = fp * (1.0 - p_c);
    l_not = tp * p_c + fp * (1.0 - p_c);
  }
  if (l_h <= 0.0 && l_not <= 0.0) return 0.0;
  return std::log(l_h) - std::log(l_not);
}

double log_odds(double p) {
  check_probability(p, "probability");
  return std::log(p) - std::log1p(-p);
}

double from_log_odds(double lo) {
  if (lo >= 0.0) return 1.0 / (1.0 + std::exp(-lo));
  const double e = std::exp(lo);
  return e / (1.0 + e);
}

double posterior_cost(double prior, double p_geq_k) {
  check_probability(prior, "prior");
  check_probability(p_geq_k, "cost tail probability");
  return bayes(prior, 1.0, p_geq_k);
}

double posterior_cost_noisy(double prior, const DetectorRates& rates, double p_c,
                            double p_geq_k) {
  check_probability(prior, "prior");
  check_probability(p_c, "concept marginal");
  check_probability(p_geq_k, "cost tail probability");
  check_rates(rates);
  const double tp = rates.true_positive;
  const double fp = rates.false_positive;
  const double l_h = tp * p_c + p_geq_k * fp * (1.0 - p_c);
  const double l_not = p_geq_k * (tp * p_c + fp * (1.0 - p_c));
  return bayes(prior, l_h, l_not);
}

double posterior_cost_contradiction(double prior, const DetectorRates& rates, double p_c) {
  check_probability(prior, "prior");
  check_probability(p_c, "concept marginal");
  check_rates(rates);
  const double tp = rates.true_positive;
  const double fp = rates.false_positive;
  // The (1 - p_geq_k) factor is common to both likelihoods and cancels.
  return bayes(prior, fp * (1.0 - p_c), tp * p_c + fp * (1.0 - p_c));
}

double CostTailEstimate::at(double k) const {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (thresholds[i] == k) return p_geq[i];
  }
  throw ContractViolation("threshold not estimated");
}

CostTailEstimate estimate_cost_tail(std::span<const double> costs,
                                    std::vector<double> thresholds) {
  if (costs.empty()) throw std::invalid_argument("no cost samples");
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  CostTailEstimate est;
  est.sample_count = costs.size();
  double running = 1.0;
  for (double k : thresholds) {
    const auto hits = std::count_if(costs.begin(), costs.end(), [k](double c) { return c >= k; });
    running = std::min(running, static_cast<double>(hits) / static_cast<double>(costs.size()));
    est.p_geq.push_back(running);
  }
  est.thresholds = std::move(thresholds);
  return est;
}

double MonteCarloResult::sigma() const {
  if (accepted == 0) return 1.0;
  return std::sqrt(std::max(estimate * (1.0 - estimate), 0.0) / static_cast<double>(accepted));
}

namespace {

struct Tally {
  std::size_t accepted = 0;
  std::size_t hits = 0;
};

Tally run_block(const GenerativeSpec& spec, std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  Tally t;
  if (const auto* p = std::get_if<PreconditionModelSpec>(&spec)) {
    const bool want = p->observation == Observation::Present;
    for (std::size_t i = 0; i < trials; ++i) {
      const bool h = rng.bernoulli(p->prior);
      const bool present = h || rng.bernoulli(p->p_c);
      const bool reported =
          rng.bernoulli(present ? p->rates.true_positive : p->rates.false_positive);
      if (reported != want) continue;
      ++t.accepted;
      t.hits += h;
    }
  } else {
    const auto& c = std::get<CostModelSpec>(spec);
    for (std::size_t i = 0; i < trials; ++i) {
      const bool h = rng.bernoulli(c.prior);
      const bool present = rng.bernoulli(c.p_c);
      const bool high = (h && present) || rng.bernoulli(c.p_geq_k);
      const bool reported =
          rng.bernoulli(present ? c.rates.true_positive : c.rates.false_positive);
      if (!reported || high != c.cost_at_least_k) continue;
      ++t.accepted;
      t.hits += h;
    }
  }
  return t;
}

}  // namespace

MonteCarloResult monte_carlo_posterior(const GenerativeSpec& spec, std::size_t trials,
                                       std::uint64_t seed, unsigned threads) {
  constexpr std::size_t kBlock = 1 << 16;
  const std::size_t blocks = (trials + kBlock - 1) / kBlock;
  std::vector<Tally> tallies(blocks);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t b = first; b < blocks; b += stride) {
      const std::size_t n = std::min(kBlock, trials - b * kBlock);
      tallies[b] = run_block(spec, n, derive_seed(seed, b));
    }
  };
  threads = std::max(1U, threads);
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::future<void>> jobs;
    for (unsigned t = 0; t < threads; ++t) {
      jobs.push_back(std::async(std::launch::async, work, t, threads));
    }
    for (auto& j : jobs) j.get();
  }
  MonteCarloResult r;
  r.trials = trials;
  std::size_t hits = 0;
  for (const Tally& t : tallies) {
    r.accepted += t.accepted;
    hits += t.hits;
  }
  r.estimate = r.accepted ? static_cast<double>(hits) / static_cast<double>(r.accepted) : 0.0;
  return r;
}

}  // namespace foilscope
