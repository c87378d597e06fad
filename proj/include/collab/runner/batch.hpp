#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "collab/harness/backend.hpp"
#include "collab/harness/report.hpp"
#include "collab/tasks/task.hpp"
#include "json.hpp"

namespace collab::runner {

struct RunConfig {
  std::vector<std::string> tasks;  // empty: every task of the selected levels
  std::vector<int> levels;         // empty: every level
  int repetitions = 10;
  std::vector<double> gammas{1.5};
  double beta = 0.95;
  std::array<harness::BackendConfig, 2> backends;  // indexed by Agent
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;  // empty: nothing is written
  harness::EpisodeConfig episode;  // gamma, beta and seed are overridden per episode

  void check() const;
};

struct TaskAggregate {
  std::string task;
  int level = 0;
  int repetitions = 0;
  int successes = 0;
  int completed = 0;  // episodes that did not abort
  double sr_percent = 0.0;
  double mean_pc = 0.0;
  std::optional<double> mean_ic;
  std::optional<double> mean_rc;
  std::array<double, 2> mean_tes{0.0, 0.0};
  std::vector<double> request_ites;
  std::vector<double> response_ites;
  harness::TokenUsage tokens;
  std::vector<std::string> failures;  // "rep <k>: <cause>" for aborted episodes
};

struct LevelAggregate {
  int level = 0;
  int episodes = 0;
  int successes = 0;
  double sr_percent = 0.0;
  double mean_pc = 0.0;
  std::optional<double> mean_ic;
  std::optional<double> mean_rc;
};

struct AggregateReport {
  double gamma = 1.5;
  double beta = 0.95;
  std::string label;  // "<bob backend>+<alice backend>"
  std::vector<TaskAggregate> tasks;
  std::vector<LevelAggregate> levels;
};

// Pure function of the persisted reports. SR counts every repetition; the
// other means run over completed (non-aborted) repetitions.
AggregateReport aggregate(const std::vector<harness::EpisodeReport>& reports, double gamma,
                          double beta, std::string label);

// Runs every selected task for every gamma. Episodes that throw are recorded
// as aborted reports, never dropped. Returns one AggregateReport per gamma.
std::vector<AggregateReport> run_batch(const RunConfig& config, const tasks::Registry& registry);

nlohmann::json to_json(const AggregateReport& r);
// One row, Table-2 layout: label, then SR and PC (both in percent) per level 1..6.
std::string to_table_csv(const AggregateReport& r);
// One row per task with every aggregate column.
std::string to_task_csv(const AggregateReport& r);

std::vector<const tasks::TaskSpec*> select_tasks(const tasks::Registry& registry,
                                                 const std::vector<std::string>& names,
                                                 const std::vector<int>& levels);

std::uint64_t episode_seed(std::uint64_t base, std::size_t task_index, int repetition);

}  // namespace collab::runner
