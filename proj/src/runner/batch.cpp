#include "collab/runner/batch.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "collab/harness/episode.hpp"

namespace collab::runner {
using nlohmann::json;

namespace {

std::optional<double> mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string opt_cell(const std::optional<double>& v) { return v ? fixed2(*v * 100.0) : ""; }

std::string gamma_dir(double g) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "gamma_%g", g);
  return buf;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

harness::EpisodeReport aborted_report(const tasks::TaskSpec& task, const harness::EpisodeConfig& cfg,
                                      const std::string& cause) {
  harness::EpisodeReport r;
  r.task = task.name;
  r.level = task.level;
  r.config = cfg;
  r.min_timesteps = task.min_timesteps;
  r.time_limit = task.time_limit(cfg.gamma);
  r.end_reason = "aborted";
  r.failure_cause = cause;
  r.metrics.required_collaborations = tasks::required_collaborations(task).size();
  return r;
}

}  // namespace

void RunConfig::check() const {
  if (repetitions < 1) throw Error("repetitions must be >= 1");
  if (gammas.empty()) throw Error("at least one gamma is required");
  for (double g : gammas)
    if (!(g > 0)) throw Error("gamma must be > 0");
  if (!(beta > 0)) throw Error("beta must be > 0");
  for (const auto& b : backends) b.check();
}

std::uint64_t episode_seed(std::uint64_t base, std::size_t task_index, int repetition) {
  return base * 1000003ULL + static_cast<std::uint64_t>(task_index) * 1009ULL +
         static_cast<std::uint64_t>(repetition);
}

std::vector<const tasks::TaskSpec*> select_tasks(const tasks::Registry& registry,
                                                 const std::vector<std::string>& names,
                                                 const std::vector<int>& levels) {
  std::vector<const tasks::TaskSpec*> out;
  for (const auto& n : names) registry.get(n);  // unknown names fail loudly
  for (const auto& t : registry.tasks()) {
    bool name_ok = names.empty() || std::find(names.begin(), names.end(), t.name) != names.end();
    bool level_ok = levels.empty() || std::find(levels.begin(), levels.end(), t.level) != levels.end();
    if (name_ok && level_ok) out.push_back(&t);
  }
  if (out.empty()) throw Error("task selection is empty");
  return out;
}

AggregateReport aggregate(const std::vector<harness::EpisodeReport>& reports, double gamma,
                          double beta, std::string label) {
  AggregateReport agg;
  agg.gamma = gamma;
  agg.beta = beta;
  agg.label = std::move(label);

  struct Acc {
    std::vector<double> pc, ic, rc, tes_bob, tes_alice;
  };
  std::map<std::pair<int, std::string>, std::pair<TaskAggregate, Acc>> by_task;
  std::map<int, std::pair<LevelAggregate, Acc>> by_level;

  for (const auto& r : reports) {
    auto& [ta, tacc] = by_task[{r.level, r.task}];
    auto& [la, lacc] = by_level[r.level];
    ta.task = r.task;
    ta.level = r.level;
    la.level = r.level;
    ++ta.repetitions;
    ++la.episodes;
    if (r.success) {
      ++ta.successes;
      ++la.successes;
    }
    for (int i = 0; i < 2; ++i) {
      ta.tokens.prompt_tokens += r.tokens[i].prompt_tokens;
      ta.tokens.completion_tokens += r.tokens[i].completion_tokens;
      ta.tokens.calls += r.tokens[i].calls;
    }
    if (r.end_reason == "aborted") {
      ta.failures.push_back("rep " + std::to_string(ta.repetitions - 1) + ": " + r.failure_cause);
      continue;
    }
    ++ta.completed;
    for (Acc* acc : {&tacc, &lacc}) {
      acc->pc.push_back(r.metrics.pc);
      if (r.metrics.ic) acc->ic.push_back(*r.metrics.ic);
      if (r.metrics.rc) acc->rc.push_back(*r.metrics.rc);
      acc->tes_bob.push_back(r.metrics.tes[0]);
      acc->tes_alice.push_back(r.metrics.tes[1]);
    }
    for (const auto& e : r.events)
      (e.kind == harness::EventKind::request ? ta.request_ites : ta.response_ites).push_back(e.ites);
  }

  for (auto& [key, entry] : by_task) {
    auto& [ta, acc] = entry;
    ta.sr_percent = 100.0 * ta.successes / ta.repetitions;
    ta.mean_pc = mean(acc.pc).value_or(0.0);
    ta.mean_ic = mean(acc.ic);
    ta.mean_rc = mean(acc.rc);
    ta.mean_tes = {mean(acc.tes_bob).value_or(0.0), mean(acc.tes_alice).value_or(0.0)};
    agg.tasks.push_back(std::move(ta));
  }
  for (auto& [level, entry] : by_level) {
    auto& [la, acc] = entry;
    la.sr_percent = 100.0 * la.successes / la.episodes;
    la.mean_pc = mean(acc.pc).value_or(0.0);
    la.mean_ic = mean(acc.ic);
    la.mean_rc = mean(acc.rc);
    agg.levels.push_back(la);
  }
  return agg;
}

std::vector<AggregateReport> run_batch(const RunConfig& config, const tasks::Registry& registry) {
  config.check();
  auto selected = select_tasks(registry, config.tasks, config.levels);
  std::vector<AggregateReport> out;

  for (double gamma : config.gammas) {
    std::vector<harness::EpisodeReport> reports;
    std::string label;
    for (std::size_t ti = 0; ti < selected.size(); ++ti) {
      const tasks::TaskSpec& task = *selected[ti];
      for (int rep = 0; rep < config.repetitions; ++rep) {
        harness::EpisodeConfig ec = config.episode;
        ec.gamma = gamma;
        ec.metric.beta = config.beta;
        ec.seed = episode_seed(config.seed, ti, rep);
        harness::EpisodeReport report;
        try {
          std::array<std::unique_ptr<harness::Backend>, 2> owned;
          for (Agent a : kAgents)
            owned[index_of(a)] = harness::make_backend(config.backends[index_of(a)], a, ec.seed);
          report = harness::run_episode(task, {owned[0].get(), owned[1].get()}, ec);
        } catch (const std::exception& e) {
          report = aborted_report(task, ec, e.what());
        }
        if (label.empty() && !report.backends[0].empty())
          label = report.backends[0] + "+" + report.backends[1];
        if (!config.out_dir.empty()) {
          auto path = config.out_dir / gamma_dir(gamma) / "episodes" / task.name /
                      ("rep_" + std::to_string(rep) + ".json");
          write_file(path, harness::to_json(report).dump(2) + "\n");
        }
        reports.push_back(std::move(report));
      }
    }
    if (label.empty()) label = config.backends[0].kind + "+" + config.backends[1].kind;
    AggregateReport agg = aggregate(reports, gamma, config.beta, label);
    if (!config.out_dir.empty()) {
      auto dir = config.out_dir / gamma_dir(gamma);
      write_file(dir / "aggregate.json", to_json(agg).dump(2) + "\n");
      write_file(dir / "table.csv", to_table_csv(agg));
      write_file(dir / "tasks.csv", to_task_csv(agg));
    }
    out.push_back(std::move(agg));
  }
  return out;
}

json to_json(const AggregateReport& r) {
  json tasks = json::array();
  for (const auto& t : r.tasks) {
    tasks.push_back({{"task", t.task},
                     {"level", t.level},
                     {"repetitions", t.repetitions},
                     {"successes", t.successes},
                     {"completed", t.completed},
                     {"sr_percent", t.sr_percent},
                     {"mean_pc", t.mean_pc},
                     {"mean_ic", opt(t.mean_ic)},
                     {"mean_rc", opt(t.mean_rc)},
                     {"mean_tes", {{"bob", t.mean_tes[0]}, {"alice", t.mean_tes[1]}}},
                     {"ites", {{"request", t.request_ites},
                               {"response", t.response_ites},
                               {"mean_request", opt(mean(t.request_ites))},
                               {"mean_response", opt(mean(t.response_ites))}}},
                     {"tokens", {{"prompt", t.tokens.prompt_tokens},
                                 {"completion", t.tokens.completion_tokens},
                                 {"calls", t.tokens.calls}}},
                     {"failures", t.failures}});
  }
  json levels = json::array();
  for (const auto& l : r.levels) {
    levels.push_back({{"level", l.level},
                      {"episodes", l.episodes},
                      {"successes", l.successes},
                      {"sr_percent", l.sr_percent},
                      {"mean_pc", l.mean_pc},
                      {"mean_ic", opt(l.mean_ic)},
                      {"mean_rc", opt(l.mean_rc)}});
  }
  return json{{"schema_version", harness::kReportSchemaVersion},
              {"gamma", r.gamma},
              {"beta", r.beta},
              {"label", r.label},
              {"tasks", tasks},
              {"levels", levels}};
}

std::string to_table_csv(const AggregateReport& r) {
  std::ostringstream out;
  out << "backends";
  for (int l = 1; l <= 6; ++l) out << ",L" << l << "_SR,L" << l << "_PC";
  out << "\n" << r.label;
  for (int l = 1; l <= 6; ++l) {
    auto it = std::find_if(r.levels.begin(), r.levels.end(),
                           [&](const LevelAggregate& x) { return x.level == l; });
    if (it == r.levels.end())
      out << ",,";
    else
      out << "," << fixed2(it->sr_percent) << "," << fixed2(it->mean_pc * 100.0);
  }
  out << "\n";
  return out.str();
}

std::string to_task_csv(const AggregateReport& r) {
  std::ostringstream out;
  out << "task,level,repetitions,successes,completed,SR,PC,IC,RC,TES_bob,TES_alice,tokens\n";
  for (const auto& t : r.tasks) {
    out << t.task << "," << t.level << "," << t.repetitions << "," << t.successes << ","
        << t.completed << "," << fixed2(t.sr_percent) << "," << fixed2(t.mean_pc * 100.0) << ","
        << opt_cell(t.mean_ic) << "," << opt_cell(t.mean_rc) << "," << fixed2(t.mean_tes[0] * 100.0)
        << "," << fixed2(t.mean_tes[1] * 100.0) << "," << t.tokens.total() << "\n";
  }
  return out.str();
}

}  // namespace collab::runner
