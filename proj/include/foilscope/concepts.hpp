#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "foilscope/model.hpp"
#include "foilscope/rng.hpp"

namespace foilscope {

using ConceptIndex = int;
using Detector = std::function<bool(StateHandle)>;

/// Truth assignment over a vocabulary, stored as packed words.
class ConceptVector {
 public:
  ConceptVector() = default;
  explicit ConceptVector(std::size_t size)
      : size_(size), words_((size + 63) / 64, 0) {}

  std::size_t size() const { return size_; }
  bool test(ConceptIndex i) const {
    return (words_[static_cast<std::size_t>(i) / 64] >> (i % 64)) & 1U;
  }
  void set(ConceptIndex i, bool value = true) {
    const std::uint64_t bit = std::uint64_t{1} << (i % 64);
    auto& w = words_[static_cast<std::size_t>(i) / 64];
    w = value ? (w | bit) : (w & ~bit);
  }
  bool contains(std::span<const ConceptIndex> subset) const {
    for (ConceptIndex c : subset) {
      if (!test(c)) return false;
    }
    return true;
  }
  std::vector<ConceptIndex> true_concepts() const;
  std::size_t count() const;

  friend bool operator==(const ConceptVector&, const ConceptVector&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

struct Literal {
  ConceptIndex id = 0;
  bool positive = true;

  friend bool operator==(const Literal&, const Literal&) = default;
};

struct BaseConcept {};
struct NegationOf {
  ConceptIndex of = 0;
};
/// Disjunction of literals over base concepts, treated as one positive concept.
struct ClauseOf {
  std::vector<Literal> literals;
};
using Provenance = std::variant<BaseConcept, NegationOf, ClauseOf>;

struct ConceptInfo {
  std::string name;
  std::string description;
  Provenance provenance;
  Detector detector;  // base concepts only
};

class ConceptVocabulary {
 public:
  ConceptIndex add_base(std::string name, Detector detector,
                        std::string description = {});
  /// `of` must be a base concept.
  ConceptIndex add_negation(ConceptIndex of);
  ConceptIndex add_clause(std::vector<Literal> literals, std::string name = {});

  std::size_t size() const { return concepts_.size(); }
  std::size_t base_count() const;
  const ConceptInfo& info(ConceptIndex i) const { return concepts_.at(static_cast<std::size_t>(i)); }
  const std::string& name(ConceptIndex i) const { return info(i).name; }
  std::optional<ConceptIndex> find(std::string_view name) const;
  std::optional<ConceptIndex> negation_of(ConceptIndex base) const;
  /// The concept with the opposite truth value everywhere, if present
  /// (base <-> its negation).
  std::optional<ConceptIndex> complement(ConceptIndex c) const;

  /// Throws ContractViolation for ⊥ or the goal end marker.
  ConceptVector evaluate(StateHandle state) const;

 private:
  std::vector<ConceptInfo> concepts_;
};

ConceptVector evaluate_concepts(const ConceptVocabulary& vocab, StateHandle state);

/// Adds not_<name> for every base concept that lacks one.
ConceptVocabulary extend_with_negations(ConceptVocabulary vocab);

ConceptIndex make_compound_clause(ConceptVocabulary& vocab,
                                  std::vector<Literal> literals);

/// Canonical CNF of a boolean function over `vars`: one clause per falsifying
/// assignment.
std::vector<std::vector<Literal>> cnf_from_truth_table(
    std::span<const ConceptIndex> vars,
    const std::function<bool(std::span<const bool>)>& formula);

struct DetectorRates {
  double true_positive = 1.0;   // P(report | present)
  double false_positive = 0.0;  // P(report | absent)

  friend bool operator==(const DetectorRates&, const DetectorRates&) = default;
};

class ObservationModel {
 public:
  ObservationModel() = default;
  explicit ObservationModel(std::vector<DetectorRates> rates);
  static ObservationModel uniform(std::size_t concepts, double tp, double fp);
  static ObservationModel exact(std::size_t concepts) {
    return uniform(concepts, 1.0, 0.0);
  }

  const DetectorRates& rates(ConceptIndex c) const { return rates_.at(static_cast<std::size_t>(c)); }
  std::size_t size() const { return rates_.size(); }
  bool is_exact() const;

 private:
  std::vector<DetectorRates> rates_;
};

/// Noisy detector output: each concept reported independently per its rates.
ConceptVector observe_concepts(const ConceptVocabulary& vocab,
                               const ObservationModel& obs, StateHandle state,
                               Rng& rng);
/// Same, for an already evaluated truth vector.
ConceptVector observe_vector(const ConceptVector& truth,
                             const ObservationModel& obs, Rng& rng);

struct ConceptMarginals {
  std::vector<double> p;
  std::size_t sample_count = 0;

  double operator[](ConceptIndex c) const { return p.at(static_cast<std::size_t>(c)); }
};

/// Bernoulli MLE per concept. Throws std::invalid_argument on no samples.
ConceptMarginals estimate_marginals(const ConceptVocabulary& vocab,
                                    std::span<const StateHandle> samples);
ConceptMarginals estimate_marginals(std::span<const ConceptVector> samples);

}  // namespace foilscope
