#include "collab/harness/report.hpp"

namespace collab::harness {
using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

Agent agent_at(const json& j, const char* key) {
  auto a = agent_from_string(j.at(key).get<std::string>());
  if (!a) throw Error(std::string("report: bad agent in '") + key + "'");
  return *a;
}

Action action_from(const std::string& s) {
  auto a = lang::parse_action(s);
  if (!a) throw Error("report: cannot parse action '" + s + "'");
  return *a;
}

json actions_json(const std::vector<Action>& v) { return lang::canonical_all(v); }

}  // namespace

std::string_view to_string(EventKind k) { return k == EventKind::request ? "request" : "response"; }

metrics::Trajectory EpisodeReport::history(Agent a) const {
  metrics::Trajectory out;
  for (const auto& e : trajectories[index_of(a)])
    if (!e.action.is_wait()) out.push_back(lang::canonical(e.action));
  return out;
}

json to_json(const EpisodeConfig& c) {
  return json{{"gamma", c.gamma},
              {"beta", c.metric.beta},
              {"seed", c.seed},
              {"max_rounds", c.max_rounds},
              {"max_retries", c.max_retries},
              {"memory_window", c.memory_window},
              {"reflection_window", c.reflection_window},
              {"token_budget", c.token_budget ? json(*c.token_budget) : json(nullptr)}};
}

EpisodeConfig episode_config_from_json(const json& j) {
  EpisodeConfig c;
  c.gamma = j.value("gamma", c.gamma);
  c.metric.beta = j.value("beta", c.metric.beta);
  c.seed = j.value("seed", c.seed);
  c.max_rounds = j.value("max_rounds", c.max_rounds);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.memory_window = j.value("memory_window", c.memory_window);
  c.reflection_window = j.value("reflection_window", c.reflection_window);
  if (j.contains("token_budget") && !j["token_budget"].is_null())
    c.token_budget = j["token_budget"].get<long>();
  return c;
}

json to_json(const EpisodeMetrics& m) {
  return json{{"sr", m.sr},
              {"pc", m.pc},
              {"ic", optional_number(m.ic)},
              {"rc", optional_number(m.rc)},
              {"required_collaborations", m.required_collaborations},
              {"tes", {{"bob", m.tes[0]}, {"alice", m.tes[1]}}}};
}

json to_json(const EpisodeReport& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["task"] = r.task;
  j["level"] = r.level;
  j["config"] = to_json(r.config);
  j["backends"] = {{"bob", r.backends[0]}, {"alice", r.backends[1]}};
  j["min_timesteps"] = r.min_timesteps;
  j["time_limit"] = r.time_limit;
  j["timesteps"] = r.timesteps;
  j["success"] = r.success;
  j["end_reason"] = r.end_reason;
  j["failure_cause"] = r.failure_cause;
  j["metrics"] = to_json(r.metrics);
  json traj = json::object();
  for (Agent a : kAgents) {
    json list = json::array();
    for (const auto& e : r.trajectories[index_of(a)])
      list.push_back({{"t", e.t}, {"action", lang::canonical(e.action)}, {"via_request", e.via_request}});
    traj[std::string(to_string(a))] = list;
  }
  j["trajectories"] = traj;
  json rejected = json::array();
  for (const auto& x : r.rejected)
    rejected.push_back({{"t", x.t},
                        {"agent", to_string(x.agent)},
                        {"stage", x.stage},
                        {"text", x.text},
                        {"code", x.code},
                        {"message", x.message}});
  j["rejected"] = rejected;
  json events = json::array();
  for (const auto& e : r.events)
    events.push_back({{"index", e.index},
                      {"kind", to_string(e.kind)},
                      {"t", e.t},
                      {"initiator", to_string(e.initiator)},
                      {"scored_against", to_string(e.scored_against)},
                      {"actions", actions_json(e.actions)},
                      {"ites", e.ites}});
  j["events"] = events;
  json convs = json::array();
  for (const auto& c : r.conversations) {
    json turns = json::array();
    for (const auto& t : c.turns) turns.push_back({{"speaker", to_string(t.speaker)}, {"text", t.text}});
    convs.push_back({{"t", c.t}, {"initiator", to_string(c.initiator)}, {"turns", turns}});
  }
  j["conversations"] = convs;
  json tokens = json::object();
  for (Agent a : kAgents) {
    const auto& u = r.tokens[index_of(a)];
    tokens[std::string(to_string(a))] = {
        {"prompt_tokens", u.prompt_tokens}, {"completion_tokens", u.completion_tokens}, {"calls", u.calls}};
  }
  j["tokens"] = tokens;
  j["wrong_deliveries"] = r.wrong_deliveries;
  return j;
}

EpisodeReport report_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version"))
    throw SchemaVersionMismatch("episode report without schema_version");
  int version = j["schema_version"].get<int>();
  if (version != kReportSchemaVersion)
    throw SchemaVersionMismatch("episode report schema_version " + std::to_string(version) +
                                " is not supported (expected " +
                                std::to_string(kReportSchemaVersion) + ")");
  EpisodeReport r;
  r.task = j.at("task").get<std::string>();
  r.level = j.at("level").get<int>();
  r.config = episode_config_from_json(j.at("config"));
  r.backends = {j.at("backends").at("bob").get<std::string>(),
                j.at("backends").at("alice").get<std::string>()};
  r.min_timesteps = j.at("min_timesteps").get<int>();
  r.time_limit = j.at("time_limit").get<int>();
  r.timesteps = j.at("timesteps").get<int>();
  r.success = j.at("success").get<bool>();
  r.end_reason = j.at("end_reason").get<std::string>();
  r.failure_cause = j.at("failure_cause").get<std::string>();
  const json& m = j.at("metrics");
  r.metrics.sr = m.at("sr").get<double>();
  r.metrics.pc = m.at("pc").get<double>();
  r.metrics.ic = number_or_null(m.at("ic"));
  r.metrics.rc = number_or_null(m.at("rc"));
  r.metrics.required_collaborations = m.at("required_collaborations").get<std::size_t>();
  r.metrics.tes = {m.at("tes").at("bob").get<double>(), m.at("tes").at("alice").get<double>()};
  for (Agent a : kAgents) {
    for (const auto& e : j.at("trajectories").at(std::string(to_string(a))))
      r.trajectories[index_of(a)].push_back(
          {e.at("t").get<int>(), action_from(e.at("action").get<std::string>()),
           e.at("via_request").get<bool>()});
  }
  for (const auto& x : j.at("rejected"))
    r.rejected.push_back({x.at("t").get<int>(), agent_at(x, "agent"), x.at("stage").get<std::string>(),
                          x.at("text").get<std::string>(), x.at("code").get<std::string>(),
                          x.at("message").get<std::string>()});
  for (const auto& e : j.at("events")) {
    CollaborationEvent ev;
    ev.index = e.at("index").get<std::size_t>();
    std::string kind = e.at("kind").get<std::string>();
    if (kind != "request" && kind != "response") throw Error("report: bad event kind '" + kind + "'");
    ev.kind = kind == "request" ? EventKind::request : EventKind::response;
    ev.t = e.at("t").get<int>();
    ev.initiator = agent_at(e, "initiator");
    ev.scored_against = agent_at(e, "scored_against");
    for (const auto& s : e.at("actions")) ev.actions.push_back(action_from(s.get<std::string>()));
    ev.ites = e.at("ites").get<double>();
    r.events.push_back(std::move(ev));
  }
  for (const auto& c : j.at("conversations")) {
    ConversationLog log;
    log.t = c.at("t").get<int>();
    log.initiator = agent_at(c, "initiator");
    for (const auto& t : c.at("turns"))
      log.turns.push_back({agent_at(t, "speaker"), t.at("text").get<std::string>()});
    r.conversations.push_back(std::move(log));
  }
  for (Agent a : kAgents) {
    const json& u = j.at("tokens").at(std::string(to_string(a)));
    r.tokens[index_of(a)] = {u.at("prompt_tokens").get<long>(), u.at("completion_tokens").get<long>(),
                             u.at("calls").get<long>()};
  }
  r.wrong_deliveries = j.at("wrong_deliveries").get<std::vector<std::string>>();
  return r;
}

}  // namespace collab::harness
