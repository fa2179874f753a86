#include "foilscope/service.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "foilscope/errors.hpp"
#include "foilscope/experiments.hpp"

namespace foilscope {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

struct SessionService::Entry {
  std::mutex mutex;
  Session session;

  explicit Entry(Session s) : session(std::move(s)) {}
};

struct SessionService::Job {
  std::mutex mutex;
  bool done = false;
  ServiceResponse response;
  std::thread worker;
};

namespace {

ServiceResponse reply(int status, const ordered_json& body) {
  return {status, body.dump()};
}

ServiceResponse error(int status, const std::string& message) {
  return reply(status, {{"v", kSessionFormatVersion}, {"error", message}});
}

std::string fnv_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

bool valid_map_id(const std::string& id) {
  if (id.empty()) return false;
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

}  // namespace

SessionService::SessionService(ServiceConfig config) : config_(std::move(config)) {
  if (!config_.data_dir) return;
  fs::create_directories(*config_.data_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(*config_.data_dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& p : files) {
    const auto j = ordered_json::parse(read_text_file(p.string()));
    Session s = Session::replay(j);
    const std::string id = s.spec().id;
    sessions_.emplace(id, std::make_shared<Entry>(std::move(s)));
    ++restored_;
  }
}

SessionService::~SessionService() {
  for (auto& [token, job] : jobs_) {
    if (job->worker.joinable()) job->worker.join();
  }
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& id) const {
  std::lock_guard lock(registry_mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void SessionService::persist(const Entry& entry) const {
  if (!config_.data_dir) return;
  const fs::path path = fs::path(*config_.data_dir) / (entry.session.spec().id + ".json");
  const fs::path tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    out << entry.session.to_json().dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

ordered_json SessionService::session_summary(const Session& s) const {
  const GridEnvironment& env = s.environment();
  ordered_json vocab = ordered_json::array();
  for (std::size_t c = 0; c < s.vocabulary().size(); ++c) {
    const ConceptInfo& info = s.vocabulary().info(static_cast<ConceptIndex>(c));
    vocab.push_back({{"name", info.name}, {"description", info.description}});
  }
  ordered_json actions = ordered_json::array();
  for (const ActionId& a : env.actions()) actions.push_back(a.label);
  ordered_json trajectory = ordered_json::array();
  for (StateHandle st : execute_sequence(env, env.initial_state(), s.plan()).states) {
    trajectory.push_back(split_lines(env.describe(st)));
  }
  return {{"v", kSessionFormatVersion},
          {"session_id", s.spec().id},
          {"map_id", s.spec().map_id},
          {"variant", std::string(variant_name(env.variant()))},
          {"seed", s.spec().seed},
          {"width", env.width()},
          {"height", env.height()},
          {"grid", split_lines(env.describe(env.initial_state()))},
          {"plan", s.spec().plan},
          {"trajectory", std::move(trajectory)},
          {"actions", std::move(actions)},
          {"vocabulary", std::move(vocab)},
          {"config", session_config_to_json(s.spec().config)}};
}

ServiceResponse SessionService::list_maps() const {
  ordered_json maps = ordered_json::array();
  for (const MapCatalogEntry& m : bundled_maps(config_.maps_dir)) {
    maps.push_back({{"id", m.id},
                    {"variant", m.variant},
                    {"width", m.width},
                    {"height", m.height},
                    {"plan_length", m.plan_length}});
  }
  return reply(200, {{"v", kSessionFormatVersion}, {"maps", std::move(maps)}});
}

ServiceResponse SessionService::create_session(const std::string& body) {
  ordered_json req;
  try {
    req = body.empty() ? ordered_json::object() : ordered_json::parse(body);
  } catch (const std::exception&) {
    return error(400, "request body is not valid JSON");
  }
  if (!req.is_object()) return error(400, "request body must be an object");
  const std::string map_id = req.value("map_id", "");
  if (map_id.empty()) return error(422, "map_id is required");
  const fs::path map_path = fs::path(config_.maps_dir) / (map_id + ".map");
  const fs::path plan_path = fs::path(config_.maps_dir) / (map_id + ".plan");
  if (!valid_map_id(map_id) || !fs::exists(map_path) || !fs::exists(plan_path)) {
    return error(404, "unknown map '" + map_id + "'");
  }

  SessionSpec spec;
  try {
    spec.map_id = map_id;
    spec.map_text = read_text_file(map_path.string());
    spec.seed = req.value("seed", std::uint64_t{0});
    spec.config = session_config_from_json(req.value("config", ordered_json::object()),
                                           config_.defaults);
    spec.base_concepts = req.value("concepts", std::vector<std::string>{});
    const auto env = parse_grid(spec.map_text);
    for (ActionIndex a : load_action_file(*env, plan_path.string())) {
      spec.plan.push_back(env->action_label(a));
    }
  } catch (const nlohmann::json::exception& e) {
    return error(422, std::string("malformed field: ") + e.what());
  }
  const ordered_json identity = {{"map_id", spec.map_id},
                                 {"map_text", spec.map_text},
                                 {"seed", spec.seed},
                                 {"concepts", spec.base_concepts},
                                 {"plan", spec.plan},
                                 {"config", session_config_to_json(spec.config)}};
  spec.id = fnv_hex(identity.dump());

  if (auto existing = find(spec.id)) {
    std::lock_guard lock(existing->mutex);
    return reply(201, session_summary(existing->session));
  }
  std::shared_ptr<Entry> entry;
  try {
    entry = std::make_shared<Entry>(Session(spec));
  } catch (const ParseError& e) {
    return error(422, e.what());
  } catch (const ContractViolation& e) {
    return error(422, e.what());
  }
  {
    std::lock_guard lock(registry_mutex_);
    entry = sessions_.emplace(spec.id, entry).first->second;
  }
  std::lock_guard lock(entry->mutex);
  persist(*entry);
  return reply(201, session_summary(entry->session));
}

ordered_json SessionService::run_foil(Entry& entry, const std::vector<std::string>& foil) {
  const Explanation& e = entry.session.explain(foil);
  persist(entry);
  ordered_json ex = explanation_to_json(e);
  ordered_json out = {{"v", kSessionFormatVersion},
                      {"session_id", entry.session.spec().id},
                      {"index", entry.session.history().size() - 1},
                      {"foil", foil}};
  if (ex.contains("trace")) {
    out["trace"] = ex["trace"];
    ex.erase("trace");
  }
  out["explanation"] = std::move(ex);
  out["rendered_text"] = render_text(e);
  out["confidence"] = e.confidence;
  out["threshold_met"] = e.threshold_met;
  return out;
}

ServiceResponse SessionService::submit_foil(const std::string& session_id,
                                            const std::string& body) {
  const auto entry = find(session_id);
  if (!entry) return error(404, "unknown session '" + session_id + "'");
  ordered_json req;
  try {
    req = ordered_json::parse(body);
  } catch (const std::exception&) {
    return error(400, "request body is not valid JSON");
  }
  if (!req.is_object() || !req.contains("actions") || !req["actions"].is_array()) {
    return error(422, "actions must be a list of action mnemonics");
  }
  const ordered_json& actions = req["actions"];
  if (actions.empty()) return error(422, "actions must not be empty");
  std::vector<std::string> foil;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (!actions[i].is_string()) return error(422, "actions must be strings");
    foil.push_back(actions[i].get<std::string>());
    if (!entry->session.environment().find_action(foil.back())) {
      return reply(422, {{"v", kSessionFormatVersion},
                         {"error", "unknown action '" + foil.back() + "'"},
                         {"token", foil.back()},
                         {"index", i}});
    }
  }

  const SessionConfig& cfg = entry->session.spec().config;
  if (std::max(cfg.precondition_budget, cfg.cost_budget) <= config_.sync_budget_cap) {
    std::lock_guard lock(entry->mutex);
    return reply(200, run_foil(*entry, foil));
  }

  auto job = std::make_shared<Job>();
  std::string token;
  {
    std::lock_guard lock(registry_mutex_);
    token = session_id + "-" + std::to_string(job_counter_++);
    jobs_.emplace(token, job);
  }
  job->worker = std::thread([this, entry, job, foil]() {
    ServiceResponse r;
    try {
      std::lock_guard lock(entry->mutex);
      r = reply(200, run_foil(*entry, foil));
    } catch (const std::exception& e) {
      r = error(500, e.what());
    }
    std::lock_guard lock(job->mutex);
    job->response = std::move(r);
    job->done = true;
  });
  return reply(202, {{"v", kSessionFormatVersion}, {"poll", "/jobs/" + token}});
}

ServiceResponse SessionService::get_session(const std::string& session_id) const {
  const auto entry = find(session_id);
  if (!entry) return error(404, "unknown session '" + session_id + "'");
  std::lock_guard lock(entry->mutex);
  return reply(200, entry->session.to_json());
}

ServiceResponse SessionService::get_job(const std::string& token) const {
  std::shared_ptr<Job> job;
  {
    std::lock_guard lock(registry_mutex_);
    const auto it = jobs_.find(token);
    if (it != jobs_.end()) job = it->second;
  }
  if (!job) return error(404, "unknown job '" + token + "'");
  std::lock_guard lock(job->mutex);
  if (!job->done) return reply(202, {{"v", kSessionFormatVersion}, {"status", "pending"}});
  return job->response;
}

void SessionService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body, "application/json");
  };
  auto guarded = [send](auto handler) {
    return [send, handler](const httplib::Request& req, httplib::Response& res) {
      try {
        send(res, handler(req));
      } catch (const std::exception& e) {
        send(res, error(500, e.what()));
      }
    };
  };
  server.Get("/maps", guarded([this](const httplib::Request&) { return list_maps(); }));
  server.Post("/sessions",
              guarded([this](const httplib::Request& req) { return create_session(req.body); }));
  server.Post(R"(/sessions/([^/]+)/foils)", guarded([this](const httplib::Request& req) {
                return submit_foil(req.matches[1], req.body);
              }));
  server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req) {
               return get_session(req.matches[1]);
             }));
  server.Get(R"(/jobs/([^/]+))",
             guarded([this](const httplib::Request& req) { return get_job(req.matches[1]); }));
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

bool run_service(SessionService& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  return server.listen(host, port);
}

}  // namespace foilscope
