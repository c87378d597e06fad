#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "collab/harness/backend.hpp"
#include "collab/harness/report.hpp"
#include "collab/tasks/task.hpp"

namespace collab::harness {

struct ConversationState {
  std::vector<ConversationTurn> transcript;
  int rounds_used = 0;
  bool terminated = false;
};

// Produces the next utterance of `speaker` given the transcript so far.
using ReplyFn = std::function<std::string(Agent speaker, const ConversationState&)>;

// Turn-based channel opened by a non-silent utterance. Speakers alternate;
// the channel closes on a silent reply, after the one reply that follows an
// [END] utterance, or once max_rounds turns (the opener included) are used.
ConversationState run_communication(Agent initiator, const std::string& opening, int max_rounds,
                                    const ReplyFn& reply);

// One planner call with format checking. Malformed replies are re-prompted
// with a format notice up to max_retries times, then FormatError is thrown.
PlannerOutput plan_step(Backend& backend, const PromptInputs& inputs, TurnKind turn,
                        int max_retries, TokenUsage* usage = nullptr);

// Hooks for live consumers such as the session service. All calls happen on
// the episode's thread.
class EpisodeObserver {
 public:
  virtual ~EpisodeObserver() = default;
  virtual void on_timestep(const env::WorldState&) {}
  virtual void on_say(int /*t*/, Agent /*speaker*/, const std::string& /*text*/) {}
  virtual void on_end(const EpisodeReport&) {}
};

EpisodeReport run_episode(const tasks::TaskSpec& task, const std::array<Backend*, 2>& backends,
                          const EpisodeConfig& config, EpisodeObserver* observer = nullptr);

// Recomputes SR, PC, IC and RC of a report from its trajectories and events.
EpisodeMetrics compute_metrics(const EpisodeReport& report, const tasks::TaskSpec& task,
                               const metrics::MetricConfig& cfg);

}  // namespace collab::harness
