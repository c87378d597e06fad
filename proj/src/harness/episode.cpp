#include "collab/harness/episode.hpp"

#include <algorithm>
#include <deque>
#include <optional>

#include "collab/lang/validator.hpp"

namespace collab::harness {
namespace {

bool silent(const std::string& text) {
  PlannerOutput o;
  o.say = text;
  return o.silent();
}

bool has_end(const std::string& text) { return text.find(kEnd) != std::string::npos; }

metrics::Trajectory canonical_nonwait(const std::vector<Action>& v) {
  metrics::Trajectory out;
  for (const auto& a : v)
    if (!a.is_wait()) out.push_back(lang::canonical(a.unwrapped()));
  return out;
}

std::vector<Action> nonwait(const std::vector<Action>& v) {
  std::vector<Action> out;
  for (const auto& a : v)
    if (!a.is_wait()) out.push_back(a.unwrapped());
  return out;
}

BackendReply call(Backend& backend, const PromptInputs& in, TurnKind turn, int attempt,
                  const std::array<std::vector<Action>, 2>* histories, TokenUsage* usage) {
  PromptBundle bundle = build_prompt(in);
  PlanRequest req;
  req.agent = in.agent;
  req.turn = turn;
  req.timestep = in.world->timestep;
  req.attempt = attempt;
  req.bundle = &bundle;
  req.prompt = bundle.render();
  req.world = in.world;
  req.task = in.task;
  req.histories = histories;
  req.incoming_request = in.incoming_request;
  req.conversation = &in.conversation;
  BackendReply reply = backend.complete(req);
  if (usage) {
    usage->prompt_tokens += reply.usage.prompt_tokens;
    usage->completion_tokens += reply.usage.completion_tokens;
    ++usage->calls;
  }
  return reply;
}

std::string format_notice(const std::string& why) {
  return "Your last reply could not be read (" + why +
         "). Reply with the three fields Analysis, Say and Plan.";
}

class EpisodeRunner {
 public:
  EpisodeRunner(const tasks::TaskSpec& task, const std::array<Backend*, 2>& backends,
                const EpisodeConfig& cfg, EpisodeObserver* obs)
      : task_(task), backends_(backends), cfg_(cfg), obs_(obs) {
    for (Agent a : kAgents) {
      if (!backends_[index_of(a)]) throw Error("run_episode: missing backend");
      report_.backends[index_of(a)] = backends_[index_of(a)]->label();
    }
    world_ = task.initial_world(cfg.gamma);
    report_.task = task.name;
    report_.level = task.level;
    report_.config = cfg;
    report_.min_timesteps = task.min_timesteps;
    report_.time_limit = world_.time_limit;
  }

  EpisodeReport run() {
    try {
      loop();
    } catch (const std::exception& e) {
      report_.end_reason = "aborted";
      report_.failure_cause = e.what();
      report_.timesteps = world_.timestep;
    }
    report_.success = world_.delivered;
    report_.wrong_deliveries = world_.wrong_deliveries;
    report_.metrics = compute_metrics(report_, task_, cfg_.metric);
    if (obs_) obs_->on_end(report_);
    return std::move(report_);
  }

 private:
  void loop() {
    while (world_.timestep < world_.time_limit) {
      const int t = world_.timestep;
      if (obs_) obs_->on_timestep(world_);
      for (Agent a : kAgents) {
        const auto i = index_of(a);
        bool needs_plan = world_.agent(a).pending_plan.empty() || !incoming_[i].empty() ||
                          !error_[i].empty();
        if (!needs_plan) continue;
        auto out = consult(a, TurnKind::plan);
        if (out && !out->silent()) communicate(a, out->say);
      }
      execute(t);
      if (world_.delivered) {
        report_.end_reason = "delivered";
        report_.timesteps = t + 1;
        return;
      }
      world_ = env::tick(world_);
    }
    report_.end_reason = "time_limit";
    report_.failure_cause = "time limit of " + std::to_string(world_.time_limit) + " timesteps reached";
    report_.timesteps = world_.timestep;
  }

  PromptInputs inputs(Agent a) const {
    const auto i = index_of(a);
    PromptInputs in;
    in.agent = a;
    in.world = &world_;
    in.task = &task_;
    auto mem = canonical_nonwait(histories_[i]);
    if (mem.size() > cfg_.memory_window)
      mem.erase(mem.begin(), mem.end() - static_cast<std::ptrdiff_t>(cfg_.memory_window));
    in.memory = std::move(mem);
    in.reflection.assign(reflection_[i].begin(), reflection_[i].end());
    in.conversation = conversation_;
    in.incoming_request = incoming_[i];
    in.error = error_[i];
    return in;
  }

  void reject(Agent a, const std::string& stage, const std::string& text, const std::string& code,
              const std::string& message) {
    report_.rejected.push_back({world_.timestep, a, stage, text, code, message});
  }

  void reflect(Agent a, std::string note) {
    auto& r = reflection_[index_of(a)];
    r.push_back(std::move(note));
    while (r.size() > cfg_.reflection_window) r.pop_front();
  }

  void charge(Agent a) {
    if (!cfg_.token_budget) return;
    long used = report_.tokens[0].total() + report_.tokens[1].total();
    if (used > *cfg_.token_budget)
      throw BudgetExceeded("token budget of " + std::to_string(*cfg_.token_budget) +
                           " exceeded after a call for " + std::string(display_name(a)));
  }

  // Prompts `a` until it returns a usable plan or the retry budget runs out,
  // then commits the longest valid prefix.
  std::optional<PlannerOutput> consult(Agent a, TurnKind turn) {
    const auto i = index_of(a);
    Backend& backend = *backends_[i];
    for (int attempt = 0;; ++attempt) {
      PromptInputs in = inputs(a);
      BackendReply reply = call(backend, in, turn, attempt, &histories_, &report_.tokens[i]);
      charge(a);
      std::string why;
      auto out = parse_planner_output(reply.text, &why);
      if (!out) {
        reject(a, "format", reply.text, "FormatError", why);
        if (attempt < cfg_.max_retries) {
          error_[i] = format_notice(why);
          continue;
        }
        error_[i].clear();
        return std::nullopt;
      }

      std::vector<Action> valid;
      std::optional<lang::ValidationError> failure;
      std::string failed_text;
      auto parsed = lang::parse_plan(out->plan);
      if (!parsed.ok()) {
        failure = lang::from_parse_error(*parsed.error);
        failed_text = out->plan;
      } else {
        for (const auto& act : parsed.actions) {
          Agent target = act.is_request ? partner_of(a) : a;
          if (auto err = lang::validate(act, target, world_)) {
            failure = std::move(err);
            failed_text = lang::canonical(act);
            break;
          }
          valid.push_back(act);
        }
      }
      if (failure) {
        reject(a, "validator", failed_text, std::string(lang::to_string(failure->code)),
               failure->message);
        reflect(a, "Scene " + std::to_string(world_.timestep) + ": " + failed_text +
                       " was rejected: " + failure->message);
        if (attempt < cfg_.max_retries) {
          error_[i] = failure->message;
          continue;
        }
      }
      error_[i].clear();
      commit(a, turn, valid);
      return out;
    }
  }

  void commit(Agent a, TurnKind turn, const std::vector<Action>& actions) {
    const auto i = index_of(a);
    const Agent p = partner_of(a);
    std::vector<Action> own, requested;
    for (const auto& act : actions) (act.is_request ? requested : own).push_back(act.unwrapped());

    const bool responding = !incoming_[i].empty();
    if (responding) {
      add_event(EventKind::response, a, a, nonwait(own));
      incoming_[i].clear();
    }
    if (!requested.empty()) {
      auto asked = nonwait(requested);
      if (!asked.empty()) {
        add_event(EventKind::request, a, p, asked);
        incoming_[index_of(p)] = asked;
      }
    }
    if (turn == TurnKind::plan || !own.empty()) {
      world_.agent(a).pending_plan = own;
      via_request_[i].assign(own.size(), responding);
    }
  }

  void add_event(EventKind kind, Agent initiator, Agent scored, std::vector<Action> actions) {
    CollaborationEvent ev;
    ev.kind = kind;
    ev.index = static_cast<std::size_t>(std::count_if(
        report_.events.begin(), report_.events.end(),
        [&](const CollaborationEvent& e) { return e.kind == kind; }));
    ev.t = world_.timestep;
    ev.initiator = initiator;
    ev.scored_against = scored;
    ev.ites = metrics::ites(canonical_nonwait(actions), canonical_nonwait(histories_[index_of(scored)]),
                            task_.rat_strings(scored), cfg_.metric);
    ev.actions = std::move(actions);
    report_.events.push_back(std::move(ev));
  }

  void communicate(Agent initiator, const std::string& opening) {
    ConversationState live;
    conversation_.clear();
    ReplyFn reply = [&](Agent speaker, const ConversationState& st) {
      conversation_ = st.transcript;
      auto out = consult(speaker, TurnKind::reply);
      return out ? out->say : std::string(kNothing);
    };
    conversation_ = {{initiator, opening}};
    if (obs_) obs_->on_say(world_.timestep, initiator, opening);
    live = run_communication(initiator, opening, cfg_.max_rounds, reply);
    for (std::size_t k = 1; k < live.transcript.size(); ++k)
      if (obs_) obs_->on_say(world_.timestep, live.transcript[k].speaker, live.transcript[k].text);
    conversation_ = live.transcript;
    report_.conversations.push_back({world_.timestep, initiator, live.transcript});
  }

  void execute(int t) {
    for (Agent a : kAgents) {
      const auto i = index_of(a);
      auto& plan = world_.agent(a).pending_plan;
      if (plan.empty()) continue;
      Action act = plan.front();
      bool via = via_request_[i].empty() ? false : via_request_[i].front();
      plan.erase(plan.begin());
      if (!via_request_[i].empty()) via_request_[i].erase(via_request_[i].begin());
      if (act.is_wait() && !act.args.empty()) {
        long n = std::stol(act.args[0]);
        if (n > 1) {
          plan.insert(plan.begin(), Action{"wait", {std::to_string(n - 1)}, false});
          via_request_[i].insert(via_request_[i].begin(), via);
        }
      }
      env::StepOutcome o = env::apply_action(world_, a, act);
      const env::AgentResult& r = o.per_agent_results[a];
      if (!r.accepted) {
        const std::string text = lang::canonical(act);
        reject(a, "environment", text, std::string(env::to_string(r.error->code)), r.error->message);
        reflect(a, "Scene " + std::to_string(t) + ": " + text + " failed: " + r.error->message);
        error_[i] = "Your action " + text + " failed: " + r.error->message;
        world_.agent(a).pending_plan.clear();
        via_request_[i].clear();
        continue;
      }
      auto pending = std::move(world_.agent(a).pending_plan);
      world_ = std::move(o.new_state);
      world_.agent(a).pending_plan = std::move(pending);
      if (r.error) {
        reject(a, "environment", lang::canonical(act), std::string(env::to_string(r.error->code)),
               r.error->message);
        reflect(a, "Scene " + std::to_string(t) + ": " + r.error->message);
      }
      if (!act.is_wait()) {
        histories_[i].push_back(act);
        report_.trajectories[i].push_back({t, act, via});
      }
    }
  }

  const tasks::TaskSpec& task_;
  std::array<Backend*, 2> backends_;
  EpisodeConfig cfg_;
  EpisodeObserver* obs_;
  env::WorldState world_;
  EpisodeReport report_;
  std::array<std::vector<Action>, 2> histories_;
  std::array<std::deque<std::string>, 2> reflection_;
  std::array<std::string, 2> error_;
  std::array<std::vector<Action>, 2> incoming_;
  std::array<std::vector<bool>, 2> via_request_;
  std::vector<ConversationTurn> conversation_;
};

}  // namespace

ConversationState run_communication(Agent initiator, const std::string& opening, int max_rounds,
                                    const ReplyFn& reply) {
  ConversationState st;
  if (silent(opening) || max_rounds < 1) {
    st.terminated = true;
    return st;
  }
  st.transcript.push_back({initiator, opening});
  st.rounds_used = 1;
  bool end_seen = has_end(opening);
  Agent speaker = partner_of(initiator);
  while (st.rounds_used < max_rounds) {
    std::string text = reply(speaker, st);
    if (silent(text)) break;
    st.transcript.push_back({speaker, text});
    ++st.rounds_used;
    if (end_seen) break;
    end_seen = has_end(text);
    speaker = partner_of(speaker);
  }
  st.terminated = true;
  return st;
}

PlannerOutput plan_step(Backend& backend, const PromptInputs& inputs, TurnKind turn,
                        int max_retries, TokenUsage* usage) {
  PromptInputs in = inputs;
  std::string why;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    BackendReply reply = call(backend, in, turn, attempt, nullptr, usage);
    if (auto out = parse_planner_output(reply.text, &why)) return *out;
    in.error = format_notice(why);
  }
  throw FormatError("planner output unreadable after " + std::to_string(max_retries + 1) +
                    " attempt(s): " + why);
}

EpisodeMetrics compute_metrics(const EpisodeReport& report, const tasks::TaskSpec& task,
                               const metrics::MetricConfig& cfg) {
  EpisodeMetrics m;
  m.sr = report.success ? 1.0 : 0.0;
  std::vector<metrics::Trajectory> histories;
  std::vector<metrics::RatSet> rats;
  for (Agent a : kAgents) {
    histories.push_back(report.history(a));
    rats.push_back(task.rat_strings(a));
    m.tes[index_of(a)] = metrics::tes(histories.back(), rats.back(), cfg);
  }
  m.pc = metrics::pc(histories, rats, cfg);
  std::vector<double> req, resp;
  for (const auto& e : report.events) (e.kind == EventKind::request ? req : resp).push_back(e.ites);
  m.required_collaborations = tasks::required_collaborations(task).size();
  m.ic = metrics::ic(req, m.required_collaborations);
  m.rc = metrics::rc(resp, m.required_collaborations);
  return m;
}

EpisodeReport run_episode(const tasks::TaskSpec& task, const std::array<Backend*, 2>& backends,
                          const EpisodeConfig& config, EpisodeObserver* observer) {
  return EpisodeRunner(task, backends, config, observer).run();
}

}  // namespace collab::harness
