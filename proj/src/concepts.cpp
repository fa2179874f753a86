#include "foilscope/concepts.hpp"

#include <bit>
#include <stdexcept>

#include "foilscope/errors.hpp"

namespace foilscope {

std::vector<ConceptIndex> ConceptVector::true_concepts() const {
  std::vector<ConceptIndex> out;
  for (std::size_t i = 0; i < size_; ++i) {
    if (test(static_cast<ConceptIndex>(i))) out.push_back(static_cast<ConceptIndex>(i));
  }
  return out;
}

std::size_t ConceptVector::count() const {
  std::size_t n = 0;
  for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

ConceptIndex ConceptVocabulary::add_base(std::string name, Detector detector,
                                         std::string description) {
  if (find(name)) throw ContractViolation("duplicate concept name " + name);
  concepts_.push_back(ConceptInfo{std::move(name), std::move(description),
                                  BaseConcept{}, std::move(detector)});
  return static_cast<ConceptIndex>(concepts_.size() - 1);
}

ConceptIndex ConceptVocabulary::add_negation(ConceptIndex of) {
  if (!std::holds_alternative<BaseConcept>(info(of).provenance)) {
    throw ContractViolation("negations are formed over base concepts only");
  }
  if (auto existing = negation_of(of)) return *existing;
  std::string name = "not_" + info(of).name;
  if (find(name)) throw ContractViolation("duplicate concept name " + name);
  concepts_.push_back(ConceptInfo{std::move(name), "negation of " + info(of).name,
                                  NegationOf{of}, {}});
  return static_cast<ConceptIndex>(concepts_.size() - 1);
}

ConceptIndex ConceptVocabulary::add_clause(std::vector<Literal> literals,
                                           std::string name) {
  if (literals.empty()) throw ContractViolation("empty clause");
  for (const Literal& l : literals) {
    if (!std::holds_alternative<BaseConcept>(info(l.id).provenance)) {
      throw ContractViolation("clause literals must refer to base concepts");
    }
  }
  if (name.empty()) {
    name = "clause(";
    for (std::size_t i = 0; i < literals.size(); ++i) {
      if (i) name += "|";
      if (!literals[i].positive) name += "!";
      name += info(literals[i].id).name;
    }
    name += ")";
  }
  if (find(name)) throw ContractViolation("duplicate concept name " + name);
  concepts_.push_back(ConceptInfo{std::move(name), "disjunction of literals",
                                  ClauseOf{std::move(literals)}, {}});
  return static_cast<ConceptIndex>(concepts_.size() - 1);
}

std::size_t ConceptVocabulary::base_count() const {
  std::size_t n = 0;
  for (const auto& c : concepts_) n += std::holds_alternative<BaseConcept>(c.provenance);
  return n;
}

std::optional<ConceptIndex> ConceptVocabulary::find(std::string_view name) const {
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    if (concepts_[i].name == name) return static_cast<ConceptIndex>(i);
  }
  return std::nullopt;
}

std::optional<ConceptIndex> ConceptVocabulary::negation_of(ConceptIndex base) const {
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    if (const auto* n = std::get_if<NegationOf>(&concepts_[i].provenance);
        n && n->of == base) {
      return static_cast<ConceptIndex>(i);
    }
  }
  return std::nullopt;
}

std::optional<ConceptIndex> ConceptVocabulary::complement(ConceptIndex c) const {
  if (const auto* n = std::get_if<NegationOf>(&info(c).provenance)) return n->of;
  if (std::holds_alternative<BaseConcept>(info(c).provenance)) return negation_of(c);
  return std::nullopt;
}

ConceptVector ConceptVocabulary::evaluate(StateHandle state) const {
  if (!state.is_live()) {
    throw ContractViolation("concepts are undefined for a non-live state");
  }
  ConceptVector v(concepts_.size());
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    if (std::holds_alternative<BaseConcept>(concepts_[i].provenance)) {
      v.set(static_cast<ConceptIndex>(i), concepts_[i].detector(state));
    }
  }
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    const auto& p = concepts_[i].provenance;
    if (const auto* n = std::get_if<NegationOf>(&p)) {
      v.set(static_cast<ConceptIndex>(i), !v.test(n->of));
    } else if (const auto* cl = std::get_if<ClauseOf>(&p)) {
      bool any = false;
      for (const Literal& l : cl->literals) any = any || (v.test(l.id) == l.positive);
      v.set(static_cast<ConceptIndex>(i), any);
    }
  }
  return v;
}

ConceptVector evaluate_concepts(const ConceptVocabulary& vocab, StateHandle state) {
  return vocab.evaluate(state);
}

ConceptVocabulary extend_with_negations(ConceptVocabulary vocab) {
  const std::size_t n = vocab.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<ConceptIndex>(i);
    if (std::holds_alternative<BaseConcept>(vocab.info(c).provenance)) {
      vocab.add_negation(c);
    }
  }
  return vocab;
}

ConceptIndex make_compound_clause(ConceptVocabulary& vocab,
                                  std::vector<Literal> literals) {
  return vocab.add_clause(std::move(literals));
}

std::vector<std::vector<Literal>> cnf_from_truth_table(
    std::span<const ConceptIndex> vars,
    const std::function<bool(std::span<const bool>)>& formula) {
  if (vars.size() > 20) throw ContractViolation("too many variables for a truth table");
  std::vector<std::vector<Literal>> clauses;
  const std::uint64_t rows = std::uint64_t{1} << vars.size();
  for (std::uint64_t row = 0; row < rows; ++row) {
    bool values[20];
    for (std::size_t i = 0; i < vars.size(); ++i) values[i] = (row >> i) & 1U;
    if (formula(std::span<const bool>(values, vars.size()))) continue;
    // Exclude exactly this assignment.
    std::vector<Literal> clause;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      clause.push_back(Literal{vars[i], !values[i]});
    }
    clauses.push_back(std::move(clause));
  }
  return clauses;
}

ObservationModel::ObservationModel(std::vector<DetectorRates> rates)
    : rates_(std::move(rates)) {
  for (const auto& r : rates_) {
    if (!(r.true_positive >= 0.0 && r.true_positive <= 1.0 &&
          r.false_positive >= 0.0 && r.false_positive <= 1.0)) {
      throw ContractViolation("detector rates must lie in [0, 1]");
    }
  }
}

ObservationModel ObservationModel::uniform(std::size_t concepts, double tp,
                                           double fp) {
  return ObservationModel(std::vector<DetectorRates>(concepts, DetectorRates{tp, fp}));
}

bool ObservationModel::is_exact() const {
  for (const auto& r : rates_) {
    if (r.true_positive != 1.0 || r.false_positive != 0.0) return false;
  }
  return true;
}

ConceptVector observe_vector(const ConceptVector& truth,
                             const ObservationModel& obs, Rng& rng) {
  if (obs.size() != truth.size()) {
    throw ContractViolation("observation model does not match vocabulary size");
  }
  ConceptVector out(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto c = static_cast<ConceptIndex>(i);
    const DetectorRates& r = obs.rates(c);
    // One draw per concept keeps the stream layout independent of the rates.
    const double u = rng.uniform();
    out.set(c, u < (truth.test(c) ? r.true_positive : r.false_positive));
  }
  return out;
}

ConceptVector observe_concepts(const ConceptVocabulary& vocab,
                               const ObservationModel& obs, StateHandle state,
                               Rng& rng) {
  return observe_vector(vocab.evaluate(state), obs, rng);
}

ConceptMarginals estimate_marginals(std::span<const ConceptVector> samples) {
  if (samples.empty()) throw std::invalid_argument("no samples for marginal estimation");
  const std::size_t n = samples.front().size();
  std::vector<std::size_t> hits(n, 0);
  for (const auto& v : samples) {
    for (std::size_t i = 0; i < n; ++i) hits[i] += v.test(static_cast<ConceptIndex>(i));
  }
  ConceptMarginals m;
  m.sample_count = samples.size();
  m.p.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.p[i] = static_cast<double>(hits[i]) / static_cast<double>(samples.size());
  }
  return m;
}

ConceptMarginals estimate_marginals(const ConceptVocabulary& vocab,
                                    std::span<const StateHandle> samples) {
  std::vector<ConceptVector> vectors;
  vectors.reserve(samples.size());
  for (StateHandle s : samples) vectors.push_back(vocab.evaluate(s));
  return estimate_marginals(vectors);
}

}  // namespace foilscope
