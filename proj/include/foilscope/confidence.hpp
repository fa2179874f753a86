#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "foilscope/concepts.hpp"

namespace foilscope {

// Sequential Bayesian updates. Each function maps a prior to the posterior
// after one observation; callers feed the result back in as the next prior.
// Probabilities outside [0, 1] throw ContractViolation.

/// Concept seen present in a state where the action executed (noiseless).
double posterior_precondition_positive(double prior, double p_c);

/// Concept seen absent in a state where the action executed (noiseless).
double posterior_precondition_negative_noiseless(double prior);

enum class Observation { Absent, Present };

/// Noisy detector version. Under the hypothesis the concept is certainly
/// present in executable states; otherwise it is present with probability p_c.
double posterior_precondition_noisy(double prior, Observation observation,
                                    const DetectorRates& rates, double p_c);

/// Concept present and cost >= k observed (noiseless).
double posterior_cost(double prior, double p_geq_k);

/// Concept reported present and cost >= k observed.
double posterior_cost_noisy(double prior, const DetectorRates& rates, double p_c,
                            double p_geq_k);

/// Concept reported present but cost < k observed. In the noiseless case this
/// refutes the bound outright.
double posterior_cost_contradiction(double prior, const DetectorRates& rates, double p_c);

/// log(L_H / L_notH) for posterior_precondition_noisy. Searches accumulate
/// these in log-odds form so long runs do not saturate at exactly 0 or 1.
/// Returns -inf when the observation rules the hypothesis out.
double precondition_log_likelihood_ratio(Observation observation, const DetectorRates& rates,
                                         double p_c);

/// log(L_H / L_notH) for one cost observation: posterior_cost_noisy when
/// `at_least_k`, posterior_cost_contradiction otherwise.
double cost_log_likelihood_ratio(const DetectorRates& rates, double p_c, double p_geq_k,
                                 bool at_least_k);

double log_odds(double p);
double from_log_odds(double lo);

struct CostTailEstimate {
  std::vector<double> thresholds;  // ascending
  std::vector<double> p_geq;       // non-increasing
  std::size_t sample_count = 0;

  /// p_geq for an exact threshold in `thresholds`.
  double at(double k) const;
};

/// Frequency of cost >= k for each threshold. Throws std::invalid_argument on
/// an empty cost list.
CostTailEstimate estimate_cost_tail(std::span<const double> costs,
                                    std::vector<double> thresholds);

/// hypothesis -> concept presence -> detector report, with the action known
/// to be executable.
struct PreconditionModelSpec {
  double prior = 0.5;
  double p_c = 0.5;
  DetectorRates rates;
  Observation observation = Observation::Present;
};

/// hypothesis and concept presence -> cost outcome; concept -> report. The
/// conditioning event is "reported present" plus the given cost outcome.
struct CostModelSpec {
  double prior = 0.5;
  double p_c = 0.5;
  double p_geq_k = 0.5;
  DetectorRates rates;
  bool cost_at_least_k = true;
};

using GenerativeSpec = std::variant<PreconditionModelSpec, CostModelSpec>;

struct MonteCarloResult {
  double estimate = 0.0;
  std::size_t accepted = 0;
  std::size_t trials = 0;

  /// Binomial standard error of the estimate.
  double sigma() const;
};

/// Forward-samples the generative model and reports the frequency of the
/// hypothesis among trials matching the observation. Trials run in fixed
/// blocks with per-block seeds, so the result depends only on (spec, trials,
/// seed) and not on the thread count.
MonteCarloResult monte_carlo_posterior(const GenerativeSpec& spec, std::size_t trials,
                                       std::uint64_t seed, unsigned threads = 1);

}  // namespace foilscope
