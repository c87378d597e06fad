#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "collab/common.hpp"
#include "collab/env/world.hpp"
#include "collab/harness/planner.hpp"
#include "collab/harness/prompt.hpp"
#include "collab/harness/report.hpp"
#include "collab/tasks/task.hpp"

namespace collab::harness {

enum class TurnKind { plan, reply };

std::string_view to_string(TurnKind k);

// Everything a backend may look at for one call. Pointers are valid for the
// duration of the call only.
struct PlanRequest {
  Agent agent = Agent::bob;
  TurnKind turn = TurnKind::plan;
  int timestep = 0;
  int attempt = 0;  // 0 for the first call, then one per re-prompt
  const PromptBundle* bundle = nullptr;
  std::string prompt;  // bundle rendered with the default template
  const env::WorldState* world = nullptr;
  const tasks::TaskSpec* task = nullptr;
  const std::array<std::vector<Action>, 2>* histories = nullptr;  // accepted, waits excluded
  std::vector<Action> incoming_request;
  const std::vector<ConversationTurn>* conversation = nullptr;
};

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct BackendReply {
  std::string text;
  Usage usage;
};

class BackendTimeout : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendReply complete(const PlanRequest& request) = 0;
  // Short label recorded in reports ("scripted_rat", "remote_chat:gpt-4o", ...).
  virtual std::string label() const = 0;
};

struct BackendConfig {
  std::string kind = "scripted_rat";  // scripted_rat | recorded_mock | wait_only | random | remote_chat
  std::string endpoint_url;           // remote_chat: base URL, "/chat/completions" is appended
  std::string model;
  std::string api_key_env;            // name of the environment variable holding the key
  double temperature = 0.7;
  double top_p = 1.0;
  int max_retries = 3;                // transport retries for remote_chat
  double request_timeout_s = 60.0;
  std::size_t rat_index = 0;          // scripted_rat
  std::filesystem::path mock_path;    // recorded_mock

  void check() const;
};

BackendConfig backend_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BackendConfig& c);

// Oracle that follows one RAT. It requests the partner's next annotated
// collaboration action as soon as the world accepts it, answers requests by
// executing exactly what was asked, and otherwise plays its own next RAT
// action or waits.
class ScriptedRatBackend : public Backend {
 public:
  explicit ScriptedRatBackend(std::size_t rat_index = 0) : rat_index_(rat_index) {}
  BackendReply complete(const PlanRequest& request) override;
  std::string label() const override { return "scripted_rat"; }

 private:
  std::size_t rat_index_;
};

class WaitOnlyBackend : public Backend {
 public:
  BackendReply complete(const PlanRequest& request) override;
  std::string label() const override { return "wait_only"; }
};

// Uniformly random single actions from the agent's action space with
// arguments drawn from the layout.
class RandomBackend : public Backend {
 public:
  explicit RandomBackend(std::uint64_t seed) : rng_(seed) {}
  BackendReply complete(const PlanRequest& request) override;
  std::string label() const override { return "random"; }

 private:
  std::mt19937_64 rng_;
};

// Replays canned planner outputs. Entries are consumed in file order per
// (agent, timestep); calls with no entry left get "[NOTHING]" and wait(1).
// Every received prompt is kept for inspection.
class RecordedMockBackend : public Backend {
 public:
  struct Entry {
    Agent agent = Agent::bob;
    int timestep = 0;
    std::string text;
  };

  explicit RecordedMockBackend(std::vector<Entry> entries);
  static std::vector<Entry> parse(const nlohmann::json& doc);
  static std::vector<Entry> load(const std::filesystem::path& path);

  BackendReply complete(const PlanRequest& request) override;
  std::string label() const override { return "recorded_mock"; }

  std::vector<std::string> prompts() const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<Agent, int>, std::deque<std::string>> queue_;
  std::vector<std::string> prompts_;
};

// Delegates to a callable; used by the session service for human players.
class CallbackBackend : public Backend {
 public:
  using Fn = std::function<BackendReply(const PlanRequest&)>;
  CallbackBackend(Fn fn, std::string label) : fn_(std::move(fn)), label_(std::move(label)) {}
  BackendReply complete(const PlanRequest& request) override { return fn_(request); }
  std::string label() const override { return label_; }

 private:
  Fn fn_;
  std::string label_;
};

// OpenAI-compatible chat completion client.
class RemoteChatBackend : public Backend {
 public:
  explicit RemoteChatBackend(BackendConfig config);
  BackendReply complete(const PlanRequest& request) override;
  std::string label() const override { return "remote_chat:" + config_.model; }

 private:
  BackendConfig config_;
};

// Builds a backend for `agent`. Recorded mocks may hold entries for both
// agents; only the ones for `agent` are used.
std::unique_ptr<Backend> make_backend(const BackendConfig& config, Agent agent, std::uint64_t seed);

}  // namespace collab::harness
