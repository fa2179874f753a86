#include "foilscope/dialogue.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "foilscope/cost_search.hpp"
#include "foilscope/errors.hpp"

namespace foilscope {

using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kSamplerStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += i + 1 == names.size() ? " and " : ", ";
    out += names[i];
  }
  return out;
}

std::string body_text(const ExplanationBody& body) {
  if (const auto* mp = std::get_if<MissingPrecondition>(&body)) {
    return "The action " + mp->fail_action + " failed in the state as the precondition " +
           mp->concept_name + " was false in the state.";
  }
  if (const auto* ca = std::get_if<CostAbstraction>(&body)) {
    std::string out;
    std::set<std::string> said;
    for (const CostEntryView& e : ca->entries) {
      if (e.concepts.empty()) continue;
      const std::string noun = e.concepts.size() == 1 ? "concept " : "concepts ";
      std::string line = "Executing the action " + e.action + " in the presence of the " + noun +
                         join_names(e.concepts) + " will cost at least " +
                         format_number(e.min_cost) + ".";
      if (!said.insert(line).second) continue;
      out += line + " ";
    }
    out += "Altogether the foil costs at least " + format_number(ca->total) +
           ", more than the plan's cost of " + format_number(ca->plan_cost) + ".";
    return out;
  }
  if (std::holds_alternative<FoilPreferredView>(body)) {
    return "The proposed alternative is at least as good as the current plan; the agent can "
           "adopt it.";
  }
  return "The current vocabulary is insufficient to explain why the foil is worse than the "
         "plan; consider adding concepts that describe the relevant part of the state.";
}

}  // namespace

void check_session_config(const SessionConfig& c) {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (c.walk_length < 0) throw ContractViolation("walk length must be nonnegative");
  if (!(c.kappa >= 0.0 && c.kappa < 1.0)) throw ContractViolation("kappa must lie in [0, 1)");
  if (!(c.prior > 0.0 && c.prior < 1.0)) {
    throw ContractViolation("prior must lie strictly between 0 and 1");
  }
  if (!prob(c.threshold) || !prob(c.detector.true_positive) || !prob(c.detector.false_positive)) {
    throw ContractViolation("threshold and detector rates must lie in [0, 1]");
  }
}

ordered_json session_config_to_json(const SessionConfig& c) {
  return {{"walk_length", c.walk_length},
          {"precondition_budget", c.precondition_budget},
          {"cost_budget", c.cost_budget},
          {"kappa", c.kappa},
          {"prior", c.prior},
          {"threshold", c.threshold},
          {"obs_tp", c.detector.true_positive},
          {"obs_fp", c.detector.false_positive}};
}

SessionConfig session_config_from_json(const ordered_json& j, SessionConfig c) {
  c.walk_length = j.value("walk_length", c.walk_length);
  c.precondition_budget = j.value("precondition_budget", c.precondition_budget);
  c.cost_budget = j.value("cost_budget", c.cost_budget);
  c.kappa = j.value("kappa", c.kappa);
  c.prior = j.value("prior", c.prior);
  c.threshold = j.value("threshold", c.threshold);
  c.detector.true_positive = j.value("obs_tp", c.detector.true_positive);
  c.detector.false_positive = j.value("obs_fp", c.detector.false_positive);
  return c;
}

std::string format_number(double v) {
  char buf[32];
  if (std::isfinite(v) && std::floor(v) == v && std::fabs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.4g", v);
  }
  return buf;
}

std::string render_text(const Explanation& e) {
  const std::string text = body_text(e.body);
  if (e.threshold_met) return text;
  return "Low confidence (" + fixed2(e.confidence) + " is below the reporting threshold " +
         fixed2(e.threshold) + "); tentative explanation only: " + text;
}

ordered_json explanation_to_json(const Explanation& e) {
  ordered_json j;
  if (const auto* mp = std::get_if<MissingPrecondition>(&e.body)) {
    j["kind"] = "missing_precondition";
    j["concept"] = mp->concept_name;
    j["fail_action"] = mp->fail_action;
    j["fail_index"] = mp->fail_index;
    j["trace"] = mp->trace;
  } else if (const auto* ca = std::get_if<CostAbstraction>(&e.body)) {
    j["kind"] = "cost_abstraction";
    ordered_json entries = ordered_json::array();
    for (const CostEntryView& en : ca->entries) {
      entries.push_back({{"step", en.step_index},
                         {"action", en.action},
                         {"concepts", en.concepts},
                         {"min_cost", en.min_cost},
                         {"confidence", en.confidence}});
    }
    j["entries"] = std::move(entries);
    j["total"] = ca->total;
    j["plan_cost"] = ca->plan_cost;
    j["conc_limit"] = ca->conc_limit;
  } else if (const auto* fp = std::get_if<FoilPreferredView>(&e.body)) {
    j["kind"] = "foil_preferred";
    j["plan_cost"] = fp->plan_cost;
    j["foil_cost"] = fp->foil_cost;
  } else {
    j["kind"] = "vocabulary_insufficient";
    j["phase"] = std::get<InsufficientVocabulary>(e.body).phase;
  }
  j["confidence"] = e.confidence;
  j["threshold"] = e.threshold;
  j["threshold_met"] = e.threshold_met;
  return j;
}

Explanation explanation_from_json(const ordered_json& j) {
  Explanation e;
  const std::string kind = j.at("kind");
  if (kind == "missing_precondition") {
    MissingPrecondition mp;
    mp.concept_name = j.at("concept");
    mp.fail_action = j.at("fail_action");
    mp.fail_index = j.at("fail_index");
    mp.trace = j.value("trace", std::vector<double>{});
    e.body = std::move(mp);
  } else if (kind == "cost_abstraction") {
    CostAbstraction ca;
    for (const auto& en : j.at("entries")) {
      ca.entries.push_back({en.at("step"), en.at("action"), en.at("concepts"), en.at("min_cost"),
                            en.at("confidence")});
    }
    ca.total = j.at("total");
    ca.plan_cost = j.at("plan_cost");
    ca.conc_limit = j.at("conc_limit");
    e.body = std::move(ca);
  } else if (kind == "foil_preferred") {
    e.body = FoilPreferredView{j.at("plan_cost"), j.at("foil_cost")};
  } else if (kind == "vocabulary_insufficient") {
    e.body = InsufficientVocabulary{j.at("phase")};
  } else {
    throw ParseError("unknown explanation kind '" + kind + "'", 1, 1);
  }
  e.confidence = j.at("confidence");
  e.threshold = j.at("threshold");
  e.threshold_met = j.at("threshold_met");
  return e;
}

ConceptVocabulary restricted_vocabulary(const GridEnvironment& env,
                                        const std::vector<std::string>& keep) {
  const ConceptVocabulary base = env.base_vocabulary();
  if (keep.empty()) return extend_with_negations(base);
  for (const std::string& name : keep) {
    if (!base.find(name)) throw ParseError("unknown concept '" + name + "'", 1, 1);
  }
  ConceptVocabulary v;
  for (std::size_t c = 0; c < base.size(); ++c) {
    const ConceptInfo& info = base.info(static_cast<ConceptIndex>(c));
    if (std::find(keep.begin(), keep.end(), info.name) == keep.end()) continue;
    v.add_base(info.name, info.detector, info.description);
  }
  return extend_with_negations(std::move(v));
}

std::vector<StateHandle> query_anchors(const GoalCompiledModel& model,
                                       const ContrastiveQuery& compiled) {
  std::vector<StateHandle> anchors;
  for (const auto* seq : {&compiled.plan, &compiled.foil}) {
    for (StateHandle s : execute_sequence(model, compiled.initial, *seq).states) {
      if (s.is_live() && std::find(anchors.begin(), anchors.end(), s) == anchors.end()) {
        anchors.push_back(s);
      }
    }
  }
  return anchors;
}

PreconditionResult run_precondition_search(const GoalCompiledModel& model,
                                           const ConceptVocabulary& vocab,
                                           const ContrastiveQuery& compiled,
                                           const InvalidFoil& failure,
                                           const SessionConfig& config, std::uint64_t seed) {
  const SamplerConfig sampler{query_anchors(model, compiled), config.walk_length,
                              config.precondition_budget, derive_seed(seed, kSamplerStream)};
  ProbabilisticPreconditionConfig pc;
  pc.sampler = sampler;
  pc.observation = ObservationModel::uniform(vocab.size(), config.detector.true_positive,
                                             config.detector.false_positive);
  pc.prior = config.prior;
  pc.kappa = config.kappa;
  pc.marginals = estimate_local_marginals(model, vocab, sampler);
  pc.observation_seed = derive_seed(seed, kNoiseStream);
  return find_missing_precondition_probabilistic(model, vocab, failure.fail_state,
                                                 failure.fail_action, pc);
}

CostSearchResult run_cost_search(const GoalCompiledModel& model, const ConceptVocabulary& vocab,
                                 const ContrastiveQuery& compiled, const SessionConfig& config,
                                 std::uint64_t seed) {
  CostSearchConfig cc;
  cc.sampler = SamplerConfig{{}, config.walk_length, config.cost_budget,
                             derive_seed(seed, kSamplerStream)};
  cc.observation = ObservationModel::uniform(vocab.size(), config.detector.true_positive,
                                             config.detector.false_positive);
  cc.prior = config.prior;
  cc.observation_seed = derive_seed(seed, kNoiseStream);
  return find_cost_abstraction(model, vocab, compiled, cc);
}

Session::Session(SessionSpec spec) : spec_(std::move(spec)) {
  check_session_config(spec_.config);
  env_ = parse_grid(spec_.map_text, spec_.variant_override);
  vocab_ = restricted_vocabulary(*env_, spec_.base_concepts);
  plan_ = parse_foil(spec_.plan);
  const CompiledQuery cq =
      compile_goal_action(env_, {env_->initial_state(), plan_, plan_, env_->goal_test()});
  if (!execute_sequence(*cq.model, cq.query.initial, cq.query.plan).valid()) {
    throw InvalidPlan("the plan does not reach the goal");
  }
}

std::vector<ActionIndex> Session::parse_foil(const std::vector<std::string>& labels) const {
  std::vector<ActionIndex> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto a = env_->find_action(labels[i]);
    if (!a) {
      throw ParseError("unknown action '" + labels[i] + "'", static_cast<int>(i + 1), 1);
    }
    out.push_back(*a);
  }
  return out;
}

const Explanation& Session::explain(const std::vector<std::string>& foil) {
  const std::vector<ActionIndex> actions = parse_foil(foil);
  Explanation e = run(actions, derive_seed(spec_.seed, history_.size()));
  history_.push_back({foil, std::move(e)});
  return history_.back().explanation;
}

Explanation Session::run(const std::vector<ActionIndex>& foil, std::uint64_t seed) const {
  const SessionConfig& cfg = spec_.config;
  const CompiledQuery cq =
      compile_goal_action(env_, {env_->initial_state(), plan_, foil, env_->goal_test()});
  const GoalCompiledModel& model = *cq.model;
  const QueryKind kind = classify_compiled(model, cq.query);

  Explanation out;
  out.threshold = cfg.threshold;
  auto finish = [&](double confidence) {
    out.confidence = confidence;
    out.threshold_met = confidence >= cfg.threshold;
    return out;
  };

  if (const auto* fp = std::get_if<FoilPreferred>(&kind)) {
    out.body = FoilPreferredView{fp->plan_cost, fp->foil_cost};
    return finish(1.0);
  }

  if (const auto* invalid = std::get_if<InvalidFoil>(&kind)) {
    const PreconditionResult r =
        run_precondition_search(model, vocab_, cq.query, *invalid, cfg, seed);
    if (!r.found()) {
      out.body = InsufficientVocabulary{"precondition"};
      return finish(1.0);
    }
    MissingPrecondition mp;
    const ConceptIndex c = *r.concept_id();
    mp.concept_name = vocab_.name(c);
    mp.fail_action = model.action_label(invalid->fail_action);
    mp.fail_index = invalid->fail_index;
    const std::size_t slot = *r.hypothesis_slot(c);
    for (const auto& row : r.trace) mp.trace.push_back(row[slot]);
    const double confidence = std::get<PreconditionFound>(r.outcome).posterior.value_or(1.0);
    mp.confidence = confidence;
    out.body = std::move(mp);
    return finish(confidence);
  }

  const CostSearchResult r = run_cost_search(model, vocab_, cq.query, cfg, seed);
  const CostExplanation* ex = r.explanation();
  if (ex == nullptr) {
    out.body = InsufficientVocabulary{"cost"};
    return finish(1.0);
  }
  CostAbstraction ca;
  ca.total = ex->total_abstract_cost;
  ca.plan_cost = ex->plan_cost;
  ca.conc_limit = ex->conc_limit;
  std::optional<double> lowest;
  double lowest_any = 1.0;
  for (const CostAbstractionEntry& e : ex->entries) {
    CostEntryView v;
    v.step_index = e.step_index;
    v.action = model.action_label(e.action);
    for (ConceptIndex c : e.subset) v.concepts.push_back(vocab_.name(c));
    v.min_cost = e.min_cost;
    v.confidence = e.confidence;
    lowest_any = std::min(lowest_any, e.confidence);
    if (!e.subset.empty()) lowest = lowest ? std::min(*lowest, e.confidence) : e.confidence;
    ca.entries.push_back(std::move(v));
  }
  out.body = std::move(ca);
  return finish(lowest.value_or(lowest_any));
}

ordered_json Session::to_json() const {
  ordered_json j;
  j["v"] = kSessionFormatVersion;
  j["id"] = spec_.id;
  j["map_id"] = spec_.map_id;
  j["map_text"] = spec_.map_text;
  j["variant_override"] =
      spec_.variant_override ? ordered_json(std::string(variant_name(*spec_.variant_override)))
                             : ordered_json(nullptr);
  j["base_concepts"] = spec_.base_concepts;
  j["plan"] = spec_.plan;
  j["seed"] = spec_.seed;
  j["config"] = session_config_to_json(spec_.config);
  ordered_json hist = ordered_json::array();
  for (const HistoryEntry& h : history_) {
    hist.push_back({{"foil", h.foil},
                    {"explanation", explanation_to_json(h.explanation)},
                    {"rendered_text", render_text(h.explanation)}});
  }
  j["history"] = std::move(hist);
  return j;
}

Session Session::replay(const ordered_json& j) {
  if (j.value("v", 0) != kSessionFormatVersion) {
    throw ParseError("unsupported session format version", 1, 1);
  }
  SessionSpec spec;
  spec.id = j.at("id");
  spec.map_id = j.at("map_id");
  spec.map_text = j.at("map_text");
  if (!j.at("variant_override").is_null()) {
    spec.variant_override = parse_variant(j.at("variant_override").get<std::string>());
  }
  spec.base_concepts = j.at("base_concepts");
  spec.plan = j.at("plan");
  spec.seed = j.at("seed");
  spec.config = session_config_from_json(j.at("config"));
  Session s(std::move(spec));
  for (const auto& h : j.at("history")) s.explain(h.at("foil").get<std::vector<std::string>>());
  return s;
}

}  // namespace foilscope
