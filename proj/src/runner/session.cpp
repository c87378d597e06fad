#include "collab/runner/session.hpp"

#include <algorithm>

namespace collab::runner {
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

json agent_json(const std::optional<Agent>& a) {
  return a ? json(std::string(to_string(*a))) : json(nullptr);
}

std::string wait_reply() {
  return harness::format_planner_output(
      harness::PlannerOutput{"Step deadline missed.", std::string(harness::kNothing), "wait(1)"});
}

const std::string& string_field(const json& payload, const char* key, bool required,
                                const std::string& fallback) {
  if (!payload.contains(key)) {
    if (required) throw MalformedPlanSubmit(std::string("missing field '") + key + "'");
    return fallback;
  }
  if (!payload[key].is_string()) throw MalformedPlanSubmit(std::string("field '") + key + "' must be a string");
  return payload[key].get_ref<const std::string&>();
}

}  // namespace

json to_json(const SessionMessage& m) {
  return json{{"v", kProtocolVersion},
              {"seq", m.seq},
              {"kind", m.kind},
              {"session_id", m.session_id},
              {"agent_id", agent_json(m.agent)},
              {"payload", m.payload}};
}

RoleSpec role_from_json(const json& j) {
  if (!j.is_object()) throw Error("role must be an object");
  RoleSpec r;
  std::string kind = j.value("kind", std::string("scripted_rat"));
  if (kind == "human") {
    r.human = true;
    r.backend.kind = "wait_only";
    return r;
  }
  r.backend = harness::backend_config_from_json(j);
  return r;
}

json to_json(const RoleSpec& r) {
  return r.human ? json{{"kind", "human"}} : harness::to_json(r.backend);
}

SessionSpec session_spec_from_json(const json& j) {
  if (!j.is_object()) throw Error("session request must be a JSON object");
  SessionSpec s;
  if (!j.contains("task") || !j["task"].is_string()) throw Error("session request needs a task name");
  s.task = j["task"].get<std::string>();
  if (j.contains("roles")) {
    const json& roles = j["roles"];
    for (Agent a : kAgents) {
      std::string key(to_string(a));
      if (roles.contains(key)) s.roles[index_of(a)] = role_from_json(roles[key]);
    }
  }
  if (j.contains("step_limit") && !j["step_limit"].is_null()) {
    if (!j["step_limit"].is_number_integer()) throw Error("step_limit must be an integer");
    s.step_limit = j["step_limit"].get<int>();
  }
  if (s.step_limit != 0 && s.step_limit != 10 && s.step_limit != 15 && s.step_limit != 20)
    throw Error("step_limit must be one of 10, 15, 20 or 0 (unlimited)");
  s.gamma = j.value("gamma", s.gamma);
  if (!(s.gamma > 0)) throw Error("gamma must be > 0");
  s.seed = j.value("seed", s.seed);
  return s;
}

class Session::Observer : public harness::EpisodeObserver {
 public:
  explicit Observer(Session& s) : s_(s) {}
  void on_timestep(const env::WorldState& w) override {
    json obs = json::object();
    for (Agent a : kAgents) obs[std::string(to_string(a))] = env::observe(w, a);
    s_.publish("state_broadcast", json{{"timestep", w.timestep}, {"world", env::to_json(w)}, {"observation", obs}},
               std::nullopt);
  }
  void on_say(int t, Agent speaker, const std::string& text) override {
    s_.publish("say", json{{"timestep", t}, {"text", text}}, speaker);
  }
  void on_end(const harness::EpisodeReport&) override {}

 private:
  Session& s_;
};

Session::Session(std::string id, const tasks::TaskSpec& task, SessionSpec spec,
                 std::chrono::milliseconds step_unit)
    : id_(std::move(id)), task_(task), spec_(std::move(spec)), step_unit_(step_unit) {
  for (Agent a : kAgents) {
    const RoleSpec& role = spec_.roles[index_of(a)];
    if (role.human) {
      backends_[index_of(a)] = std::make_unique<harness::CallbackBackend>(
          [this, a](const harness::PlanRequest& req) { return human_turn(a, req); }, "human");
    } else {
      backends_[index_of(a)] = harness::make_backend(role.backend, a, spec_.seed);
    }
  }
}

Session::~Session() { close(); }

void Session::start() {
  std::lock_guard lock(mu_);
  if (thread_.joinable() || finished_) return;
  thread_ = std::thread([this] { run(); });
}

void Session::close() {
  {
    std::lock_guard lock(mu_);
    closing_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
}

void Session::publish(std::string kind, json payload, std::optional<Agent> agent) {
  {
    std::lock_guard lock(mu_);
    SessionMessage m;
    m.seq = log_.size() + 1;
    m.kind = std::move(kind);
    m.payload = std::move(payload);
    m.session_id = id_;
    m.agent = agent;
    log_.push_back(std::move(m));
  }
  cv_.notify_all();
}

harness::BackendReply Session::human_turn(Agent agent, const harness::PlanRequest& req) {
  const auto i = index_of(agent);
  std::uint64_t prompt_id;
  std::optional<Clock::time_point> deadline;
  {
    std::lock_guard lock(mu_);
    if (closing_) throw Error("session closed");
    prompt_id = next_prompt_id_++;
    PendingPrompt p;
    p.id = prompt_id;
    p.t = req.timestep;
    if (spec_.step_limit > 0) {
      auto key = std::make_pair(static_cast<int>(i), req.timestep);
      auto it = step_deadlines_.find(key);
      if (it == step_deadlines_.end())
        it = step_deadlines_.emplace(key, Clock::now() + spec_.step_limit * step_unit_).first;
      p.deadline = it->second;
      p.has_deadline = true;
      deadline = p.deadline;
    }
    pending_[i] = p;
  }

  json view{{"prompt_id", prompt_id},
            {"turn", std::string(harness::to_string(req.turn))},
            {"timestep", req.timestep},
            {"attempt", req.attempt},
            {"prompt", req.prompt},
            {"incoming_request", lang::canonical_all(req.incoming_request)}};
  if (req.bundle) {
    view["system"] = req.bundle->system_text();
    view["user"] = req.bundle->user_text();
  }
  publish("prompt_view", std::move(view), agent);
  long remaining_ms = -1;
  if (deadline)
    remaining_ms = std::max<long>(
        0, std::chrono::duration_cast<std::chrono::milliseconds>(*deadline - Clock::now()).count());
  publish("timer",
          json{{"prompt_id", prompt_id},
               {"timestep", req.timestep},
               {"step_limit", spec_.step_limit},
               {"step_unit_ms", step_unit_.count()},
               {"remaining_ms", deadline ? json(remaining_ms) : json(nullptr)},
               {"expired", false}},
          agent);

  std::unique_lock lock(mu_);
  auto ready = [&] { return closing_ || (pending_[i] && pending_[i]->answer); };
  bool done = deadline ? cv_.wait_until(lock, *deadline, ready) : (cv_.wait(lock, ready), true);
  if (closing_) {
    pending_[i].reset();
    throw Error("session closed");
  }
  if (done && pending_[i] && pending_[i]->answer) {
    std::string text = std::move(*pending_[i]->answer);
    pending_[i].reset();
    return {std::move(text), {}};
  }
  pending_[i].reset();
  violations_.push_back({agent, req.timestep, prompt_id, "timeout"});
  lock.unlock();
  publish("timer",
          json{{"prompt_id", prompt_id}, {"timestep", req.timestep}, {"expired", true},
               {"applied", "wait(1)"}},
          agent);
  return {wait_reply(), {}};
}

void Session::submit(Agent agent, const std::string& kind, const json& payload) {
  if (!payload.is_object()) throw MalformedPlanSubmit("payload must be an object");
  if (!payload.contains("prompt_id") || !payload["prompt_id"].is_number_unsigned())
    throw MalformedPlanSubmit("missing or invalid 'prompt_id'");
  const auto prompt_id = payload["prompt_id"].get<std::uint64_t>();
  static const std::string empty;
  static const std::string nothing(harness::kNothing);
  harness::PlannerOutput out;
  if (kind == "plan_submit") {
    out.analysis = string_field(payload, "analysis", false, empty);
    out.say = string_field(payload, "say", false, nothing);
    out.plan = string_field(payload, "plan", true, empty);
  } else if (kind == "say") {
    out.say = string_field(payload, "text", true, empty);
  } else {
    throw MalformedPlanSubmit("clients may send 'plan_submit' or 'say', not '" + kind + "'");
  }
  if (out.say.empty()) out.say = nothing;
  if (!spec_.roles[index_of(agent)].human)
    throw MalformedPlanSubmit(std::string(display_name(agent)) + " is not played by a human");

  json echo = payload;
  {
    std::lock_guard lock(mu_);
    if (finished_) throw LateSubmit("the episode has ended");
    auto& p = pending_[index_of(agent)];
    if (!p || p->id != prompt_id || p->answer)
      throw LateSubmit("prompt " + std::to_string(prompt_id) + " is not open");
    if (p->has_deadline && Clock::now() > p->deadline) {
      violations_.push_back({agent, p->t, prompt_id, "late_submit"});
      throw LateSubmit("prompt " + std::to_string(prompt_id) + " missed its deadline");
    }
    p->answer = harness::format_planner_output(out);
  }
  cv_.notify_all();
  publish(kind, std::move(echo), agent);
}

void Session::run() {
  Observer obs(*this);
  harness::EpisodeConfig cfg;
  cfg.gamma = spec_.gamma;
  cfg.seed = spec_.seed;
  harness::EpisodeReport report =
      harness::run_episode(task_, {backends_[0].get(), backends_[1].get()}, cfg, &obs);
  {
    std::lock_guard lock(mu_);
    for (const auto& v : violations_)
      report.rejected.push_back({v.t, v.agent, "deadline", "prompt " + std::to_string(v.prompt_id),
                                 "DeadlineViolation", v.reason});
    report_ = report;
    finished_ = true;
    for (auto& p : pending_) p.reset();
  }
  publish("episode_end",
          json{{"success", report.success},
               {"end_reason", report.end_reason},
               {"failure_cause", report.failure_cause},
               {"timesteps", report.timesteps},
               {"metrics", harness::to_json(report.metrics)}},
          std::nullopt);
}

std::vector<SessionMessage> Session::messages_since(std::uint64_t since, std::chrono::milliseconds wait) {
  std::unique_lock lock(mu_);
  if (wait.count() > 0)
    cv_.wait_for(lock, wait, [&] { return log_.size() > since || finished_ || closing_; });
  std::vector<SessionMessage> out;
  for (std::size_t k = since; k < log_.size(); ++k) out.push_back(log_[k]);
  return out;
}

bool Session::finished() const {
  std::lock_guard lock(mu_);
  return finished_;
}

std::optional<harness::EpisodeReport> Session::report() const {
  std::lock_guard lock(mu_);
  return report_;
}

std::vector<DeadlineViolation> Session::violations() const {
  std::lock_guard lock(mu_);
  return violations_;
}

json Session::summary() const {
  std::lock_guard lock(mu_);
  json roles = json::object();
  for (Agent a : kAgents) roles[std::string(to_string(a))] = to_json(spec_.roles[index_of(a)]);
  json open = json::object();
  for (Agent a : kAgents) {
    const auto& p = pending_[index_of(a)];
    open[std::string(to_string(a))] = p ? json(p->id) : json(nullptr);
  }
  return json{{"session_id", id_},
              {"task", spec_.task},
              {"roles", roles},
              {"step_limit", spec_.step_limit},
              {"gamma", spec_.gamma},
              {"seed", spec_.seed},
              {"finished", finished_},
              {"messages", log_.size()},
              {"open_prompts", open},
              {"deadline_violations", violations_.size()}};
}

SessionManager::~SessionManager() { close_all(); }

std::shared_ptr<Session> SessionManager::create(SessionSpec spec) {
  const tasks::TaskSpec& task = registry_.get(spec.task);
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = "s" + std::to_string(++counter_);
  }
  auto s = std::make_shared<Session>(id, task, std::move(spec), step_unit_);
  {
    std::lock_guard lock(mu_);
    sessions_[id] = s;
  }
  s->start();
  return s;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionNotFound("no session '" + id + "'");
  return it->second;
}

std::vector<std::shared_ptr<Session>> SessionManager::list() const {
  std::lock_guard lock(mu_);
  std::vector<std::shared_ptr<Session>> out;
  for (const auto& [id, s] : sessions_) out.push_back(s);
  return out;
}

void SessionManager::close(const std::string& id) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw SessionNotFound("no session '" + id + "'");
    s = it->second;
    sessions_.erase(it);
  }
  s->close();
}

void SessionManager::close_all() {
  std::map<std::string, std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mu_);
    all.swap(sessions_);
  }
  for (auto& [id, s] : all) s->close();
}

}  // namespace collab::runner
