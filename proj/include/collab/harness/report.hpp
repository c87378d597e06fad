#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "collab/common.hpp"
#include "collab/lang/action.hpp"
#include "collab/metrics/metrics.hpp"
#include "json.hpp"

namespace collab::harness {

inline constexpr int kReportSchemaVersion = 1;

class SchemaVersionMismatch : public Error {
 public:
  using Error::Error;
};

struct EpisodeConfig {
  double gamma = 1.5;
  metrics::MetricConfig metric;
  std::uint64_t seed = 0;
  int max_rounds = 4;
  int max_retries = 3;
  std::size_t memory_window = 20;
  std::size_t reflection_window = 5;
  std::optional<long> token_budget;  // summed over both agents
};

struct TrajectoryEntry {
  int t = 0;
  Action action;
  bool via_request = false;  // executed as part of a response to a request
};

enum class EventKind { request, response };

struct CollaborationEvent {
  std::size_t index = 0;  // position among events of the same kind
  EventKind kind = EventKind::request;
  int t = 0;
  Agent initiator = Agent::bob;       // who produced the actions
  Agent scored_against = Agent::bob;  // whose history and RATs score them
  std::vector<Action> actions;        // request wrapper stripped
  double ites = 0.0;
};

struct RejectedAction {
  int t = 0;
  Agent agent = Agent::bob;
  std::string stage;  // format | validator | environment | deadline
  std::string text;   // canonical action or raw planner text
  std::string code;
  std::string message;
};

struct ConversationTurn {
  Agent speaker = Agent::bob;
  std::string text;
};

struct ConversationLog {
  int t = 0;
  Agent initiator = Agent::bob;
  std::vector<ConversationTurn> turns;
};

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
  long calls = 0;

  long total() const { return prompt_tokens + completion_tokens; }
};

struct EpisodeMetrics {
  double sr = 0.0;
  double pc = 0.0;
  std::optional<double> ic;
  std::optional<double> rc;
  std::size_t required_collaborations = 0;
  std::array<double, 2> tes{0.0, 0.0};
};

struct EpisodeReport {
  int schema_version = kReportSchemaVersion;
  std::string task;
  int level = 0;
  EpisodeConfig config;
  std::array<std::string, 2> backends;
  int min_timesteps = 0;
  int time_limit = 0;
  int timesteps = 0;
  bool success = false;
  std::string end_reason;  // delivered | time_limit | aborted
  std::string failure_cause;
  EpisodeMetrics metrics;
  std::array<std::vector<TrajectoryEntry>, 2> trajectories;
  std::vector<RejectedAction> rejected;
  std::vector<CollaborationEvent> events;
  std::vector<ConversationLog> conversations;
  std::array<TokenUsage, 2> tokens;
  std::vector<std::string> wrong_deliveries;

  // Canonical histories (waits excluded) used for TES.
  metrics::Trajectory history(Agent a) const;
};

std::string_view to_string(EventKind k);

nlohmann::json to_json(const EpisodeConfig& c);
EpisodeConfig episode_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EpisodeMetrics& m);
nlohmann::json to_json(const EpisodeReport& r);
// Throws SchemaVersionMismatch for other versions.
EpisodeReport report_from_json(const nlohmann::json& j);

}  // namespace collab::harness
