// collab: batch evaluation, session service, offline rescoring and task catalog.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "collab/runner/batch.hpp"
#include "collab/runner/score.hpp"
#include "collab/runner/server.hpp"

#ifndef COLLAB_DEFAULT_TASKS_DIR
#define COLLAB_DEFAULT_TASKS_DIR "data/tasks"
#endif

using namespace collab;
using nlohmann::json;

namespace {

// Accepts {"bob": {...}, "alice": {...}} or a single config used for both.
std::array<harness::BackendConfig, 2> load_backends(const std::string& path) {
  std::array<harness::BackendConfig, 2> out;
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw Error("cannot open backend config " + path);
  json doc = json::parse(in);
  if (doc.contains("bob") || doc.contains("alice")) {
    for (Agent a : kAgents) {
      std::string key(to_string(a));
      if (doc.contains(key)) out[index_of(a)] = harness::backend_config_from_json(doc[key]);
    }
  } else {
    out[0] = out[1] = harness::backend_config_from_json(doc);
  }
  // Relative mock paths resolve against the config file.
  for (auto& b : out)
    if (!b.mock_path.empty() && b.mock_path.is_relative())
      b.mock_path = std::filesystem::path(path).parent_path() / b.mock_path;
  return out;
}

std::string pct(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
  return buf;
}

void print_aggregate(const runner::AggregateReport& agg) {
  std::printf("gamma=%g beta=%g backends=%s\n", agg.gamma, agg.beta, agg.label.c_str());
  std::printf("%-40s %5s %8s %8s %8s %8s\n", "task", "level", "SR", "PC", "IC", "RC");
  for (const auto& t : agg.tasks)
    std::printf("%-40s %5d %8.2f %8.2f %8s %8s\n", t.task.c_str(), t.level, t.sr_percent, t.mean_pc * 100.0,
                pct(t.mean_ic).c_str(), pct(t.mean_rc).c_str());
  for (const auto& l : agg.levels)
    std::printf("%-40s %5d %8.2f %8.2f %8s %8s\n", "(level)", l.level, l.sr_percent, l.mean_pc * 100.0,
                pct(l.mean_ic).c_str(), pct(l.mean_rc).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-agent kitchen collaboration benchmark"};
  app.require_subcommand(1);
  std::string tasks_dir = COLLAB_DEFAULT_TASKS_DIR;
  app.add_option("--tasks-dir", tasks_dir, "Directory with task JSON files")->capture_default_str();

  runner::RunConfig rc;
  std::string backend_path;
  auto* run = app.add_subcommand("run", "Run batch evaluation");
  run->add_option("--tasks", rc.tasks, "Task names (default: all)");
  run->add_option("--levels", rc.levels, "Levels 1-6 (default: all)");
  run->add_option("--reps", rc.repetitions, "Repetitions per task")->capture_default_str();
  std::vector<double> gammas;
  run->add_option("--gamma", gammas, "Time-limit factor; repeat for a sweep (default 1.5)");
  run->add_option("--beta", rc.beta, "TES beta")->capture_default_str();
  run->add_option("--backend-config", backend_path, "Backend JSON (default: scripted oracles)");
  run->add_option("--seed", rc.seed, "Base seed")->capture_default_str();
  std::string out_dir;
  run->add_option("--out", out_dir, "Output directory for reports");

  std::string bind = "127.0.0.1:8080";
  int step_limit = 0;
  int step_unit_ms = 1000;
  std::string static_dir;
  auto* serve = app.add_subcommand("serve", "Serve live sessions over HTTP");
  serve->add_option("--bind", bind, "host:port")->capture_default_str();
  serve->add_option("--step-limit", step_limit, "Default per-step limit: 10, 15, 20 or 0")
      ->check(CLI::IsMember({0, 10, 15, 20}))
      ->capture_default_str();
  serve->add_option("--step-unit-ms", step_unit_ms, "Length of one step-limit unit in ms")->capture_default_str();
  serve->add_option("--static", static_dir, "Directory served at /");

  std::vector<std::string> traces;
  auto* score = app.add_subcommand("score", "Recompute metrics of stored episode reports");
  score->add_option("traces", traces, "EpisodeReport JSON files");

  std::optional<int> level;
  auto* catalog = app.add_subcommand("catalog", "List shipped tasks");
  catalog->add_option("--level", level, "Only this level");
  bool as_json = false;
  catalog->add_flag("--json", as_json, "Print JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    tasks::Registry registry = tasks::Registry::load_dir(tasks_dir);

    if (*run) {
      if (!gammas.empty()) rc.gammas = gammas;
      rc.backends = load_backends(backend_path);
      rc.out_dir = out_dir;
      for (const auto& agg : runner::run_batch(rc, registry)) print_aggregate(agg);
      if (!out_dir.empty()) std::printf("reports written to %s\n", out_dir.c_str());
      return 0;
    }

    if (*serve) {
      runner::ServerOptions opt;
      auto colon = bind.rfind(':');
      if (colon == std::string::npos) throw Error("--bind expects host:port");
      opt.host = bind.substr(0, colon);
      opt.port = std::stoi(bind.substr(colon + 1));
      if (step_limit) opt.default_step_limit = step_limit;
      opt.step_unit = std::chrono::milliseconds(step_unit_ms);
      opt.static_dir = static_dir;
      // Signals are taken synchronously by a watcher thread; every other
      // thread inherits the blocked mask.
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      runner::SessionServer server(registry, opt);
      int port = server.bind();
      std::thread watcher([&] {
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
      });
      std::printf("listening on %s:%d\n", opt.host.c_str(), port);
      std::fflush(stdout);
      server.serve();
      watcher.join();
      return 0;
    }

    if (*score) {
      std::vector<std::filesystem::path> paths(traces.begin(), traces.end());
      json result = runner::score_traces(paths, registry);
      std::cout << result.dump(2) << "\n";
      return result["all_match"].get<bool>() ? 0 : 1;
    }

    if (*catalog) {
      auto rows = registry.catalog(level);
      if (as_json) {
        json list = json::array();
        for (const auto& r : rows) list.push_back(tasks::to_json(r));
        std::cout << list.dump(2) << "\n";
        return 0;
      }
      std::printf("%-5s %-40s %13s %11s %9s\n", "level", "task", "min_timesteps", "min_actions", "collab_N");
      for (const auto& r : rows)
        std::printf("%-5d %-40s %13d %11d %9d\n", r.level, r.name.c_str(), r.min_timesteps, r.min_actions,
                    r.min_collab_actions);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
