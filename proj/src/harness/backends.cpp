#include <algorithm>
#include <fstream>

#include "collab/harness/backend.hpp"
#include "collab/lang/validator.hpp"

namespace collab::harness {
using nlohmann::json;

namespace {

std::string reply_text(const std::string& analysis, const std::vector<Action>& plan,
                       std::string say = std::string(kNothing)) {
  std::string p;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (i) p += "; ";
    p += lang::canonical(plan[i]);
  }
  return format_planner_output(PlannerOutput{analysis, std::move(say), p});
}

Action wait_one() { return Action{"wait", {"1"}, false}; }

bool accepted(const env::WorldState& world, Agent a, const Action& act) {
  env::StepOutcome o = env::apply_action(world, a, act);
  const auto& r = o.per_agent_results[a];
  return r.accepted && !r.error;
}

bool is_slot(const tasks::Rat& rat, Agent a, std::size_t step) {
  return std::any_of(rat.slots.begin(), rat.slots.end(), [&](const tasks::CollaborationSlot& s) {
    return s.agent == a && s.step == step;
  });
}

}  // namespace

std::string_view to_string(TurnKind k) { return k == TurnKind::plan ? "plan" : "reply"; }

void BackendConfig::check() const {
  static const std::vector<std::string> kinds = {"scripted_rat", "recorded_mock", "wait_only",
                                                 "random", "remote_chat"};
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
    throw Error("unknown backend kind '" + kind + "'");
  if (kind == "remote_chat" && (endpoint_url.empty() || model.empty()))
    throw Error("remote_chat backend requires endpoint_url and model");
  if (kind == "recorded_mock" && mock_path.empty())
    throw Error("recorded_mock backend requires mock_path");
  if (max_retries < 0) throw Error("max_retries must be >= 0");
}

BackendConfig backend_config_from_json(const json& j) {
  BackendConfig c;
  c.kind = j.value("kind", c.kind);
  c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
  c.model = j.value("model", c.model);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.temperature = j.value("temperature", c.temperature);
  c.top_p = j.value("top_p", c.top_p);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.request_timeout_s = j.value("request_timeout", c.request_timeout_s);
  c.rat_index = j.value("rat_index", c.rat_index);
  if (j.contains("mock_path")) c.mock_path = j["mock_path"].get<std::string>();
  c.check();
  return c;
}

json to_json(const BackendConfig& c) {
  return json{{"kind", c.kind},
              {"endpoint_url", c.endpoint_url},
              {"model", c.model},
              {"api_key_env", c.api_key_env},
              {"temperature", c.temperature},
              {"top_p", c.top_p},
              {"max_retries", c.max_retries},
              {"request_timeout", c.request_timeout_s},
              {"rat_index", c.rat_index},
              {"mock_path", c.mock_path.string()}};
}

BackendReply ScriptedRatBackend::complete(const PlanRequest& req) {
  if (!req.task || !req.world || !req.histories) throw Error("scripted_rat: incomplete request");
  if (!req.incoming_request.empty()) {
    std::vector<Action> plan;
    for (const auto& a : req.incoming_request) plan.push_back(a.unwrapped());
    return {reply_text("Doing what my partner asked.", plan), {}};
  }
  if (req.turn == TurnKind::reply) return {reply_text("Nothing to add.", {}), {}};
  if (rat_index_ >= req.task->rats.size()) throw Error("scripted_rat: RAT index out of range");

  const tasks::Rat& rat = req.task->rats[rat_index_];
  const env::WorldState& world = *req.world;
  const Agent self = req.agent;
  const Agent other = partner_of(self);
  const std::size_t mine = (*req.histories)[index_of(self)].size();
  const std::size_t theirs = (*req.histories)[index_of(other)].size();

  std::vector<Action> plan;
  if (theirs < rat.of(other).size() && is_slot(rat, other, theirs) &&
      world.agent(other).pending_plan.empty()) {
    const Action& next = rat.of(other)[theirs];
    if (accepted(world, other, next)) {
      Action r = next;
      r.is_request = true;
      plan.push_back(r);
    }
  }
  if (mine < rat.of(self).size() && !is_slot(rat, self, mine) &&
      accepted(world, self, rat.of(self)[mine]))
    plan.push_back(rat.of(self)[mine]);
  else
    plan.push_back(wait_one());
  return {reply_text("Following the reference trajectory.", plan), {}};
}

BackendReply WaitOnlyBackend::complete(const PlanRequest&) {
  return {reply_text("Waiting.", {wait_one()}), {}};
}

BackendReply RandomBackend::complete(const PlanRequest& req) {
  if (!req.world) throw Error("random: incomplete request");
  const env::Layout& layout = *req.world->layout;
  const auto& space = lang::action_space(req.agent);
  auto pick = [&](const auto& v) -> decltype(auto) {
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(rng_)];
  };
  std::vector<std::string> places;
  for (const auto& el : layout.elements())
    if (el.kind != env::ElementKind::delivery && env::reachable_by(el.owner, req.agent))
      places.push_back(el.id);
  std::vector<std::string> items(layout.item_universe().begin(), layout.item_universe().end());

  Action a;
  a.func = pick(space);
  std::size_t n = *lang::arity(a.func);
  if (a.func == "wait") {
    a.args = {std::to_string(std::uniform_int_distribution<int>(1, 3)(rng_))};
  } else if (n == 2) {
    a.args = {pick(items), pick(places)};
  } else if (n == 1) {
    a.args = {pick(places)};
  }
  return {reply_text("Trying something.", {a}), {}};
}

RecordedMockBackend::RecordedMockBackend(std::vector<Entry> entries) {
  for (auto& e : entries) queue_[{e.agent, e.timestep}].push_back(std::move(e.text));
}

std::vector<RecordedMockBackend::Entry> RecordedMockBackend::parse(const json& doc) {
  if (!doc.is_array()) throw Error("recorded mock: top level must be a list");
  std::vector<Entry> out;
  for (const auto& e : doc) {
    Entry entry;
    auto a = agent_from_string(e.at("agent").get<std::string>());
    if (!a) throw Error("recorded mock: bad agent");
    entry.agent = *a;
    entry.timestep = e.at("timestep").get<int>();
    if (e.contains("raw")) {
      entry.text = e["raw"].get<std::string>();
    } else {
      entry.text = format_planner_output(PlannerOutput{e.value("analysis", std::string()),
                                                       e.value("say", std::string(kNothing)),
                                                       e.value("plan", std::string())});
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<RecordedMockBackend::Entry> RecordedMockBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open recorded mock " + path.string());
  return parse(json::parse(in));
}

BackendReply RecordedMockBackend::complete(const PlanRequest& req) {
  std::lock_guard lock(mu_);
  prompts_.push_back(req.prompt);
  auto it = queue_.find({req.agent, req.timestep});
  if (it == queue_.end() || it->second.empty())
    return {reply_text("No recorded output.", {wait_one()}), {}};
  std::string text = std::move(it->second.front());
  it->second.pop_front();
  return {std::move(text), {}};
}

std::vector<std::string> RecordedMockBackend::prompts() const {
  std::lock_guard lock(mu_);
  return prompts_;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config, Agent agent, std::uint64_t seed) {
  config.check();
  if (config.kind == "scripted_rat") return std::make_unique<ScriptedRatBackend>(config.rat_index);
  if (config.kind == "wait_only") return std::make_unique<WaitOnlyBackend>();
  if (config.kind == "random")
    return std::make_unique<RandomBackend>(seed * 2 + static_cast<std::uint64_t>(index_of(agent)));
  if (config.kind == "recorded_mock") {
    auto entries = RecordedMockBackend::load(config.mock_path);
    std::erase_if(entries, [&](const auto& e) { return e.agent != agent; });
    return std::make_unique<RecordedMockBackend>(std::move(entries));
  }
  return std::make_unique<RemoteChatBackend>(config);
}

}  // namespace collab::harness
