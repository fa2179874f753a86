#include <doctest.h>

#include <cmath>

#include "foilscope/confidence.hpp"
#include "foilscope/errors.hpp"

using namespace foilscope;

TEST_CASE("noiseless precondition updates") {
  CHECK(posterior_precondition_positive(0.5, 0.5) == doctest::Approx(2.0 / 3.0));
  CHECK(posterior_precondition_positive(0.5, 1.0) == doctest::Approx(0.5));
  CHECK(posterior_precondition_negative_noiseless(0.9) == 0.0);

  double p = 0.5;
  for (int i = 0; i < 10; ++i) p = posterior_precondition_positive(p, 0.5);
  CHECK(p == doctest::Approx(1024.0 / 1025.0));
}

TEST_CASE("noisy precondition updates") {
  const DetectorRates r{0.95, 0.05};
  CHECK(posterior_precondition_noisy(0.5, Observation::Absent, r, 0.5) ==
        doctest::Approx(1.0 / 11.0).epsilon(1e-9));
  CHECK(posterior_precondition_noisy(0.5, Observation::Present, r, 0.5) >
        posterior_precondition_noisy(0.5, Observation::Absent, r, 0.5));
  // Exact rates reduce to the noiseless rules.
  CHECK(posterior_precondition_noisy(0.3, Observation::Present, {1.0, 0.0}, 0.4) ==
        doctest::Approx(posterior_precondition_positive(0.3, 0.4)));
  CHECK(posterior_precondition_noisy(0.3, Observation::Absent, {1.0, 0.0}, 0.4) == 0.0);
}

TEST_CASE("cost updates") {
  CHECK(posterior_cost(0.5, 0.5) == doctest::Approx(2.0 / 3.0));
  CHECK(posterior_cost_noisy(0.5, {1.0, 0.0}, 0.3, 0.5) == doctest::Approx(2.0 / 3.0));
  CHECK(posterior_cost_contradiction(0.5, {1.0, 0.0}, 0.3) == 0.0);

  const DetectorRates r{0.9, 0.1};
  // Reported present but cheap: only a false positive explains it under H.
  const double expected = 0.5 * 0.1 * 0.7 / (0.5 * 0.1 * 0.7 + 0.5 * (0.9 * 0.3 + 0.1 * 0.7));
  CHECK(posterior_cost_contradiction(0.5, r, 0.3) == doctest::Approx(expected));
}

TEST_CASE("log-odds accumulation matches sequential updates") {
  CHECK(from_log_odds(log_odds(0.2)) == doctest::Approx(0.2));
  CHECK(from_log_odds(-800.0) >= 0.0);
  CHECK(from_log_odds(800.0) == 1.0);

  const DetectorRates r{0.9, 0.05};
  double direct = 0.5;
  double lo = log_odds(0.5);
  const Observation seq[] = {Observation::Present, Observation::Absent, Observation::Present,
                             Observation::Present};
  for (Observation o : seq) {
    direct = posterior_precondition_noisy(direct, o, r, 0.4);
    lo += precondition_log_likelihood_ratio(o, r, 0.4);
  }
  CHECK(from_log_odds(lo) == doctest::Approx(direct));

  double cost_direct = 0.5;
  double cost_lo = 0.0;
  cost_direct = posterior_cost_noisy(cost_direct, r, 0.3, 0.4);
  cost_lo += cost_log_likelihood_ratio(r, 0.3, 0.4, true);
  cost_direct = posterior_cost_contradiction(cost_direct, r, 0.3);
  cost_lo += cost_log_likelihood_ratio(r, 0.3, 0.4, false);
  CHECK(from_log_odds(cost_lo) == doctest::Approx(cost_direct));

  CHECK(std::isinf(precondition_log_likelihood_ratio(Observation::Absent, {1.0, 0.0}, 0.5)));
}

TEST_CASE("invalid probabilities are rejected") {
  CHECK_THROWS_AS(posterior_precondition_positive(1.5, 0.5), ContractViolation);
  CHECK_THROWS_AS(posterior_cost(0.5, -0.1), ContractViolation);
  CHECK_THROWS_AS(posterior_precondition_noisy(0.5, Observation::Present, {1.2, 0.0}, 0.5),
                  ContractViolation);
}

TEST_CASE("cost tail") {
  std::vector<double> costs{1, 1, 10, 10};
  auto tail = estimate_cost_tail(costs, {1, 10, 11});
  CHECK(tail.at(1) == doctest::Approx(1.0));
  CHECK(tail.at(10) == doctest::Approx(0.5));
  CHECK(tail.at(11) == doctest::Approx(0.0));
  CHECK_THROWS_AS(estimate_cost_tail(std::span<const double>{}, {1}), std::invalid_argument);
}

TEST_CASE("Monte-Carlo oracle agrees with the closed form and is thread-independent") {
  const PreconditionModelSpec spec{0.5, 0.5, {0.95, 0.05}, Observation::Absent};
  auto one = monte_carlo_posterior(spec, 400000, 11, 1);
  auto four = monte_carlo_posterior(spec, 400000, 11, 4);
  CHECK(one.estimate == four.estimate);
  CHECK(one.accepted == four.accepted);
  const double closed = posterior_precondition_noisy(0.5, Observation::Absent, {0.95, 0.05}, 0.5);
  CHECK(std::fabs(one.estimate - closed) < 4.0 * one.sigma());

  const CostModelSpec cost{0.4, 0.3, 0.6, {0.9, 0.1}, true};
  auto mc = monte_carlo_posterior(cost, 400000, 5, 2);
  CHECK(std::fabs(mc.estimate - posterior_cost_noisy(0.4, {0.9, 0.1}, 0.3, 0.6)) <
        4.0 * mc.sigma());
}
