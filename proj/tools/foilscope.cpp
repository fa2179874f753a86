#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "foilscope/dialogue.hpp"
#include "foilscope/environments.hpp"
#include "foilscope/errors.hpp"
#include "foilscope/experiments.hpp"
#include "foilscope/service.hpp"

#ifndef FOILSCOPE_MAPS_DIR
#define FOILSCOPE_MAPS_DIR "assets/maps"
#endif

using namespace foilscope;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitExplanation = 1;
constexpr int kExitUsage = 2;

// Flags shared by the commands that run searches.
struct SearchFlags {
  std::string map;
  std::string plan;
  std::string foil;
  std::string vocab;
  std::string variant;
  std::uint64_t seed = 0;
  std::optional<std::size_t> budget;
  SessionConfig config;
  std::string out;

  void add_to(CLI::App& cmd, bool needs_foil) {
    cmd.add_option("--map", map, "map file")->required()->check(CLI::ExistingFile);
    cmd.add_option("--plan", plan, "plan file, one mnemonic per line")
        ->required()
        ->check(CLI::ExistingFile);
    auto* f = cmd.add_option("--foil", foil, "foil file, one mnemonic per line")
                  ->check(CLI::ExistingFile);
    if (needs_foil) f->required();
    cmd.add_option("--vocab", vocab, "file listing the base concepts to keep");
    cmd.add_option("--variant", variant, "reinterpret the map as another variant");
    cmd.add_option("--seed", seed, "random seed")->envname("FOILSCOPE_SEED");
    cmd.add_option("--budget", budget, "sampling budget (default 500 precondition, 750 cost)");
    cmd.add_option("--kappa", config.kappa, "elimination threshold")->capture_default_str();
    cmd.add_option("--walk-length", config.walk_length, "random walk length")
        ->capture_default_str();
    cmd.add_option("--threshold", config.threshold, "reporting threshold")
        ->capture_default_str();
    cmd.add_option("--obs-tp", config.detector.true_positive, "detector true-positive rate")
        ->capture_default_str();
    cmd.add_option("--obs-fp", config.detector.false_positive, "detector false-positive rate")
        ->capture_default_str();
    cmd.add_option("--out", out, "output file");
  }

  SessionConfig session_config() const {
    SessionConfig c = config;
    if (budget) {
      c.precondition_budget = *budget;
      c.cost_budget = *budget;
    }
    check_session_config(c);
    return c;
  }

  std::optional<Variant> variant_override() const {
    if (variant.empty()) return std::nullopt;
    const auto v = parse_variant(variant);
    if (!v) throw ParseError("unknown variant '" + variant + "'");
    return v;
  }

  std::vector<std::string> base_concepts() const {
    std::vector<std::string> out;
    if (vocab.empty()) return out;
    std::istringstream in(read_text_file(vocab));
    for (std::string line; std::getline(in, line);) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream words(line);
      for (std::string w; words >> w;) out.push_back(w);
    }
    if (out.empty()) throw ParseError("vocabulary file " + vocab + " lists no concepts");
    return out;
  }
};

std::vector<std::string> action_labels(const GridEnvironment& env, const std::string& path) {
  std::vector<std::string> out;
  for (ActionIndex a : load_action_file(env, path)) out.push_back(env.action_label(a));
  return out;
}

void write_output(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int cmd_explain(const SearchFlags& f, bool strict) {
  SessionSpec spec;
  spec.map_id = std::filesystem::path(f.map).stem().string();
  spec.id = spec.map_id;
  spec.map_text = read_text_file(f.map);
  spec.variant_override = f.variant_override();
  spec.base_concepts = f.base_concepts();
  spec.seed = f.seed;
  spec.config = f.session_config();
  const auto env = parse_grid(spec.map_text, spec.variant_override);
  spec.plan = action_labels(*env, f.plan);
  Session session(spec);
  const std::vector<std::string> foil = action_labels(session.environment(), f.foil);
  const Explanation& e = session.explain(foil);

  const std::string text = render_text(e);
  std::cout << text << '\n';
  ordered_json record = {{"v", kSessionFormatVersion},
                         {"map_id", spec.map_id},
                         {"variant", std::string(variant_name(env->variant()))},
                         {"seed", spec.seed},
                         {"config", session_config_to_json(spec.config)},
                         {"plan", spec.plan},
                         {"foil", foil},
                         {"explanation", explanation_to_json(e)},
                         {"rendered_text", text}};
  if (!f.out.empty()) write_output(f.out, record.dump(2) + "\n");
  if (strict && std::holds_alternative<InsufficientVocabulary>(e.body)) return kExitExplanation;
  return kExitOk;
}

int cmd_curves(const SearchFlags& f, std::size_t seeds, const std::string& concept_name) {
  const LoadedScenario sc = load_query(f.map, f.plan, f.foil, f.variant_override());
  const ConceptVocabulary vocab = restricted_vocabulary(*sc.env, f.base_concepts());
  const CurveResult curves =
      posterior_curves(sc, vocab, f.session_config(), seeds, f.seed,
                       concept_name.empty() ? std::nullopt : std::optional(concept_name));
  const std::string csv = curves_csv(curves);
  if (f.out.empty()) {
    std::cout << csv;
    return kExitOk;
  }
  write_output(f.out, csv);
  std::cout << "concept " << curves.concept_name << ": final mean posterior "
            << format_number(curves.rows.back().mean) << " over " << seeds << " seeds\n";
  std::cout << "rivals eliminated at sample:";
  for (const auto& g : curves.rivals_gone) std::cout << ' ' << (g ? std::to_string(*g) : "never");
  std::cout << '\n';
  return kExitOk;
}

int cmd_assumptions(const SearchFlags& f, const AssumptionConfig& base) {
  const auto env = load_map_file(f.map, f.variant_override());
  const auto plan = load_action_file(*env, f.plan);
  AssumptionConfig config = base;
  config.seed = f.seed;
  config.walk_length = f.config.walk_length;
  const AssumptionReport report = assumption_report(*env, plan, config);
  if (!f.out.empty()) write_output(f.out, assumption_csv(report));
  char line[160];
  std::cout << "states " << report.samples << '\n';
  std::snprintf(line, sizeof line, "%-14s %10s %8s %8s  %s", "action", "executable", "max_gap",
                "mean_gap", "worst_concept");
  std::cout << line << '\n';
  for (const AssumptionSummary& s : report.summaries) {
    std::snprintf(line, sizeof line, "%-14s %10zu %8.4f %8.4f  %s", s.action.c_str(), s.executable,
                  s.max_gap, s.mean_gap, s.worst_concept.c_str());
    std::cout << line << '\n';
  }
  for (const AssumptionRow& r : report.flagged) {
    std::snprintf(line, sizeof line, "flagged %s %s gap %.4f", r.action.c_str(),
                  r.concept_name.c_str(), r.gap);
    std::cout << line << '\n';
  }
  return kExitOk;
}

std::string state_name(StateHandle s) {
  return s.is_live() ? std::to_string(s.raw()) : std::string("goal_end");
}

int cmd_validate(const SearchFlags& f, std::size_t radius, std::size_t foil_length) {
  const auto env = load_map_file(f.map, f.variant_override());
  const auto plan = load_action_file(*env, f.plan);
  const ValidationResult v = validate_environment(*env, plan, radius, foil_length);
  std::cout << "radius " << v.radius << ", " << v.states << " states, "
            << v.report.violations.size() << " violations, " << v.orderings_broken << " of "
            << v.orderings_checked << " orderings broken\n";
  for (const ApproximationViolation& x : v.report.violations) {
    std::cout << "violation state " << state_name(x.state) << " action "
              << (x.action < 0 ? std::string("goal") : env->action_label(x.action))
              << " condition " << x.condition << '\n';
  }
  if (!f.out.empty()) {
    ordered_json j = {{"radius", v.radius},
                      {"states", v.states},
                      {"orderings_checked", v.orderings_checked},
                      {"orderings_broken", v.orderings_broken}};
    ordered_json list = ordered_json::array();
    for (const ApproximationViolation& x : v.report.violations) {
      list.push_back({{"state", state_name(x.state)},
                      {"action", x.action < 0 ? std::string("goal") : env->action_label(x.action)},
                      {"condition", std::string(1, x.condition)}});
    }
    j["violations"] = std::move(list);
    write_output(f.out, j.dump(2) + "\n");
  }
  return v.report.ok() && v.orderings_broken == 0 ? kExitOk : kExitExplanation;
}

int cmd_serve(int port, const std::string& host, const std::string& maps_dir,
              const std::string& data_dir) {
  ServiceConfig config;
  config.maps_dir = maps_dir;
  if (!data_dir.empty()) config.data_dir = data_dir;
  SessionService service(config);
  std::cerr << "serving on http://" << host << ':' << port << " (" << service.restored()
            << " sessions restored)\n";
  if (!run_service(service, host, port)) {
    std::cerr << "foilscope: cannot listen on " << host << ':' << port << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive explanations for black-box planning agents"};
  app.require_subcommand(0, 1);

  std::optional<int> serve_port;
  std::string host = "127.0.0.1";
  std::string maps_dir = FOILSCOPE_MAPS_DIR;
  std::string data_dir;
  app.add_option("--serve", serve_port, "start the HTTP service on this port");

  SearchFlags explain_flags;
  bool strict = false;
  auto* explain = app.add_subcommand("explain", "explain why the plan beats a foil");
  explain_flags.add_to(*explain, true);
  explain->add_flag("--strict", strict, "exit 1 when the vocabulary is insufficient");

  SearchFlags curve_flags;
  std::size_t seeds = 10;
  std::string concept_name;
  auto* curves = app.add_subcommand("curves", "posterior of a precondition over the budget");
  curve_flags.add_to(*curves, true);
  curves->add_option("--seeds", seeds, "number of runs")->capture_default_str();
  curves->add_option("--concept", concept_name, "concept to trace");

  SearchFlags assumption_flags;
  AssumptionConfig assumption_config;
  bool walks = false;
  std::string plant;
  auto* assumptions =
      app.add_subcommand("assumptions", "executable-vs-all concept frequency gaps");
  assumption_flags.add_to(*assumptions, false);
  assumptions->add_flag("--walks", walks, "sample random walks instead of all states");
  assumptions->add_option("--samples", assumption_config.samples, "walk samples")
      ->capture_default_str();
  assumptions->add_option("--flag-gap", assumption_config.flag_gap, "gap to flag")
      ->capture_default_str();
  assumptions->add_option("--plant", plant, "plant a concept true exactly where ACTION executes");

  SearchFlags validate_flags;
  std::size_t radius = kDefaultOracleRadius;
  std::size_t foil_length = 3;
  auto* validate = app.add_subcommand("validate", "check the trivial symbolic approximation");
  validate_flags.add_to(*validate, false);
  validate->add_option("--radius", radius, "region radius")->capture_default_str();
  validate->add_option("--max-foil-length", foil_length, "longest sequence for ordering checks")
      ->capture_default_str();

  int port = 8080;
  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  serve->add_option("--port", port, "port")->capture_default_str();
  for (CLI::App* cmd : {&app, serve}) {
    cmd->add_option("--host", host, "bind address")->capture_default_str();
    cmd->add_option("--maps-dir", maps_dir, "bundled maps")->capture_default_str();
    cmd->add_option("--data-dir", data_dir, "session persistence directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*explain) return cmd_explain(explain_flags, strict);
    if (*curves) return cmd_curves(curve_flags, seeds, concept_name);
    if (*assumptions) {
      assumption_config.exhaustive = !walks;
      if (!plant.empty()) assumption_config.plant_for_action = plant;
      return cmd_assumptions(assumption_flags, assumption_config);
    }
    if (*validate) return cmd_validate(validate_flags, radius, foil_length);
    if (*serve) return cmd_serve(port, host, maps_dir, data_dir);
    if (serve_port) return cmd_serve(*serve_port, host, maps_dir, data_dir);
    std::cerr << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "foilscope: error: " << e.what() << '\n';
    return kExitUsage;
  }
}
