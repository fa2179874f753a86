#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "foilscope/dialogue.hpp"

namespace httplib {
class Server;
}

namespace foilscope {

/// Requests whose sampling budget exceeds this run in the background and
/// answer 202 with a poll token.
inline constexpr std::size_t kDefaultSyncBudgetCap = 20000;

struct ServiceConfig {
  std::string maps_dir;
  /// Sessions are written here after every change and replayed on startup.
  std::optional<std::string> data_dir;
  SessionConfig defaults;
  std::size_t sync_budget_cap = kDefaultSyncBudgetCap;
};

struct ServiceResponse {
  int status = 200;
  std::string body;
};

/// Transport-independent request handling. Session ids are derived from the
/// creation request (map, seed, plan, concepts, config), so creating the same
/// session twice returns the same id and body. Foil submissions are the only
/// mutating call; they are serialized per session.
class SessionService {
 public:
  explicit SessionService(ServiceConfig config);
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  ServiceResponse list_maps() const;
  ServiceResponse create_session(const std::string& body);
  ServiceResponse submit_foil(const std::string& session_id, const std::string& body);
  ServiceResponse get_session(const std::string& session_id) const;
  ServiceResponse get_job(const std::string& token) const;

  /// Sessions restored from the data directory at construction.
  std::size_t restored() const { return restored_; }

  void mount(httplib::Server& server);

 private:
  struct Entry;
  struct Job;

  std::shared_ptr<Entry> find(const std::string& id) const;
  void persist(const Entry& entry) const;
  nlohmann::ordered_json session_summary(const Session& session) const;
  nlohmann::ordered_json run_foil(Entry& entry, const std::vector<std::string>& foil);

  ServiceConfig config_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::size_t job_counter_ = 0;
  std::size_t restored_ = 0;
};

/// Blocks serving on host:port until the server is stopped.
bool run_service(SessionService& service, const std::string& host, int port);

}  // namespace foilscope
