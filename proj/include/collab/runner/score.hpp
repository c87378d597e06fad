#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "collab/harness/report.hpp"
#include "collab/tasks/task.hpp"
#include "json.hpp"

namespace collab::runner {

struct RescoredEpisode {
  std::string source;  // path or caller-supplied name
  std::string task;
  harness::EpisodeMetrics stored;
  harness::EpisodeMetrics recomputed;
  std::vector<double> stored_ites;
  std::vector<double> recomputed_ites;
  bool replay_consistent = true;  // every trajectory action replays as accepted
  std::vector<std::string> notes;

  bool matches() const;
};

// Recomputes metrics from raw trajectories and events. SR comes from
// replaying the trajectories through the environment, event ITES from the
// scored agent's history strictly before the event's timestep.
RescoredEpisode rescore(const harness::EpisodeReport& report, const tasks::TaskSpec& task,
                        std::string source = {});

// Loads each file (throws SchemaVersionMismatch on a foreign version) and
// rescores it. An empty list yields an empty report.
nlohmann::json score_traces(const std::vector<std::filesystem::path>& paths,
                            const tasks::Registry& registry);

}  // namespace collab::runner
