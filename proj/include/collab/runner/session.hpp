#pragma once

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "collab/harness/backend.hpp"
#include "collab/harness/episode.hpp"
#include "collab/tasks/task.hpp"
#include "json.hpp"

namespace collab::runner {

inline constexpr int kProtocolVersion = 1;

class SessionNotFound : public Error {
 public:
  using Error::Error;
};

class MalformedPlanSubmit : public Error {
 public:
  using Error::Error;
};

// A submission that can no longer be applied: past the deadline, for a
// prompt that is not open, or after the episode ended.
class LateSubmit : public Error {
 public:
  using Error::Error;
};

struct SessionMessage {
  std::uint64_t seq = 0;
  std::string kind;  // state_broadcast | prompt_view | say | plan_submit | timer | episode_end
  nlohmann::json payload;
  std::string session_id;
  std::optional<Agent> agent;
};

nlohmann::json to_json(const SessionMessage& m);

struct DeadlineViolation {
  Agent agent = Agent::bob;
  int t = 0;
  std::uint64_t prompt_id = 0;
  std::string reason;  // "timeout" | "late_submit"
};

// One player seat: a human driven through the wire protocol, or a backend.
struct RoleSpec {
  bool human = false;
  harness::BackendConfig backend;
};

RoleSpec role_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RoleSpec& r);

struct SessionSpec {
  std::string task;
  std::array<RoleSpec, 2> roles;
  int step_limit = 0;  // 10, 15 or 20 step units; 0 is unlimited
  double gamma = 1.5;
  std::uint64_t seed = 0;
};

// Throws Error on bad input, including a step_limit outside {0, 10, 15, 20}.
SessionSpec session_spec_from_json(const nlohmann::json& j);

// One live episode on its own thread. The thread is the only writer of the
// episode's WorldState; clients interact through messages and submissions.
class Session {
 public:
  Session(std::string id, const tasks::TaskSpec& task, SessionSpec spec,
          std::chrono::milliseconds step_unit);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void start();
  // Aborts a running episode; blocks until its thread has finished.
  void close();

  const std::string& id() const { return id_; }
  const SessionSpec& spec() const { return spec_; }

  // Messages with seq > since. Blocks up to `wait` when none are available
  // and the episode is still running.
  std::vector<SessionMessage> messages_since(std::uint64_t since,
                                             std::chrono::milliseconds wait = std::chrono::milliseconds(0));

  // Applies a client message ("plan_submit" or "say") for a human seat.
  // Throws MalformedPlanSubmit (400) or LateSubmit (409).
  void submit(Agent agent, const std::string& kind, const nlohmann::json& payload);

  bool finished() const;
  std::optional<harness::EpisodeReport> report() const;
  std::vector<DeadlineViolation> violations() const;
  nlohmann::json summary() const;

 private:
  class Observer;
  struct PendingPrompt {
    std::uint64_t id = 0;
    int t = 0;
    std::chrono::steady_clock::time_point deadline;
    bool has_deadline = false;
    std::optional<std::string> answer;
  };

  void publish(std::string kind, nlohmann::json payload, std::optional<Agent> agent);
  harness::BackendReply human_turn(Agent agent, const harness::PlanRequest& req);
  void run();

  std::string id_;
  const tasks::TaskSpec& task_;
  SessionSpec spec_;
  std::chrono::milliseconds step_unit_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<SessionMessage> log_;
  std::uint64_t next_prompt_id_ = 1;
  std::array<std::optional<PendingPrompt>, 2> pending_;
  std::map<std::pair<int, int>, std::chrono::steady_clock::time_point> step_deadlines_;
  std::vector<DeadlineViolation> violations_;
  std::optional<harness::EpisodeReport> report_;
  bool closing_ = false;
  bool finished_ = false;

  std::array<std::unique_ptr<harness::Backend>, 2> backends_;
  std::thread thread_;
};

// Thread-safe registry of live sessions.
class SessionManager {
 public:
  SessionManager(const tasks::Registry& registry, std::chrono::milliseconds step_unit)
      : registry_(registry), step_unit_(step_unit) {}
  ~SessionManager();

  std::shared_ptr<Session> create(SessionSpec spec);
  std::shared_ptr<Session> get(const std::string& id) const;  // throws SessionNotFound
  std::vector<std::shared_ptr<Session>> list() const;
  void close(const std::string& id);  // throws SessionNotFound
  void close_all();

  const tasks::Registry& registry() const { return registry_; }

 private:
  const tasks::Registry& registry_;
  std::chrono::milliseconds step_unit_;
  mutable std::mutex mu_;
  std::uint64_t counter_ = 0;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace collab::runner
