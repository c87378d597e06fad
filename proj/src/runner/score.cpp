#include "collab/runner/score.hpp"

#include <fstream>

#include "collab/harness/episode.hpp"

namespace collab::runner {
using nlohmann::json;

namespace {

// Replays accepted actions at their recorded timesteps; returns whether the
// order was delivered.
bool replay(const harness::EpisodeReport& report, const tasks::TaskSpec& task,
            std::vector<std::string>& notes) {
  env::WorldState world = task.initial_world(report.config.gamma);
  int last = -1;
  for (const auto& traj : report.trajectories)
    for (const auto& e : traj) last = std::max(last, e.t);
  std::array<std::size_t, 2> cursor{0, 0};
  for (int t = 0; t <= last; ++t) {
    for (Agent a : kAgents) {
      const auto& traj = report.trajectories[index_of(a)];
      auto& k = cursor[index_of(a)];
      while (k < traj.size() && traj[k].t == t) {
        auto o = env::apply_action(world, a, traj[k].action);
        if (!o.per_agent_results[a].accepted) {
          notes.push_back("t=" + std::to_string(t) + " " + std::string(to_string(a)) + " " +
                          lang::canonical(traj[k].action) + " does not replay: " +
                          o.per_agent_results[a].error->message);
        } else {
          world = std::move(o.new_state);
        }
        ++k;
      }
    }
    if (world.delivered) return true;
    if (t == last) break;
    if (world.timestep + 1 > world.time_limit) {
      notes.push_back("trajectory runs past the time limit");
      break;
    }
    world = env::tick(world);
  }
  return world.delivered;
}

metrics::Trajectory history_before(const harness::EpisodeReport& report, Agent a, int t) {
  metrics::Trajectory h;
  for (const auto& e : report.trajectories[index_of(a)])
    if (e.t < t && !e.action.is_wait()) h.push_back(lang::canonical(e.action));
  return h;
}

}  // namespace

bool RescoredEpisode::matches() const {
  const auto& a = stored;
  const auto& b = recomputed;
  return a.sr == b.sr && a.pc == b.pc && a.ic == b.ic && a.rc == b.rc &&
         a.required_collaborations == b.required_collaborations && a.tes == b.tes &&
         stored_ites == recomputed_ites;
}

RescoredEpisode rescore(const harness::EpisodeReport& report, const tasks::TaskSpec& task,
                        std::string source) {
  RescoredEpisode out;
  out.source = std::move(source);
  out.task = report.task;
  out.stored = report.metrics;

  harness::EpisodeReport copy = report;
  const std::size_t notes_before = out.notes.size();
  copy.success = replay(report, task, out.notes);
  out.replay_consistent = out.notes.size() == notes_before;
  for (auto& e : copy.events) {
    out.stored_ites.push_back(e.ites);
    metrics::Trajectory acts;
    for (const auto& a : e.actions)
      if (!a.is_wait()) acts.push_back(lang::canonical(a.unwrapped()));
    e.ites = metrics::ites(acts, history_before(report, e.scored_against, e.t),
                           task.rat_strings(e.scored_against), report.config.metric);
    out.recomputed_ites.push_back(e.ites);
  }
  if (copy.success != report.success) out.notes.push_back("stored success flag disagrees with replay");
  out.recomputed = harness::compute_metrics(copy, task, report.config.metric);
  return out;
}

json score_traces(const std::vector<std::filesystem::path>& paths, const tasks::Registry& registry) {
  json episodes = json::array();
  bool all = true;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw Error("cannot open trace " + p.string());
    json doc = json::parse(in);
    harness::EpisodeReport report = harness::report_from_json(doc);
    RescoredEpisode r = rescore(report, registry.get(report.task), p.string());
    all = all && r.matches();
    episodes.push_back({{"source", r.source},
                        {"task", r.task},
                        {"stored", harness::to_json(r.stored)},
                        {"recomputed", harness::to_json(r.recomputed)},
                        {"stored_ites", r.stored_ites},
                        {"recomputed_ites", r.recomputed_ites},
                        {"replay_consistent", r.replay_consistent},
                        {"notes", r.notes},
                        {"match", r.matches()}});
  }
  return json{{"schema_version", harness::kReportSchemaVersion},
              {"episodes", episodes},
              {"all_match", all}};
}

}  // namespace collab::runner
