#include "collab/tasks/task.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "collab/lang/validator.hpp"

namespace collab::tasks {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing field '" + key + "'");
  return *it;
}

std::string string_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string() || v.get<std::string>().empty())
    throw SchemaError(where + ": field '" + key + "' must be a nonempty string");
  return v.get<std::string>();
}

std::vector<std::string> string_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) throw SchemaError(where + ": expected an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

bool valid_item_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::vector<env::SynthesisEntry> parse_synthesis(const json& list, const std::string& where) {
  if (!list.is_array()) throw SchemaError(where + ": synthesis table must be an array");
  std::vector<env::SynthesisEntry> out;
  for (const auto& e : list) {
    env::SynthesisEntry entry;
    entry.inputs = string_list(field(e, "inputs", where), where + ".inputs");
    entry.process = string_field(e, "action", where);
    if (entry.process != "cook" && entry.process != "bake" && entry.process != "cut" &&
        entry.process != "stir")
      throw SchemaError(where + ": unknown process '" + entry.process + "'");
    const json& d = field(e, "duration", where);
    if (!d.is_number_integer() || d.get<int>() < 1)
      throw SchemaError(where + ": duration must be an integer >= 1");
    entry.duration = d.get<int>();
    entry.output = string_field(e, "output", where);
    for (const auto& name : entry.inputs)
      if (!valid_item_name(name)) throw SchemaError(where + ": bad item name '" + name + "'");
    if (!valid_item_name(entry.output))
      throw SchemaError(where + ": bad item name '" + entry.output + "'");
    out.push_back(std::move(entry));
  }
  return out;
}

// Every task document names its order and must deliver it: replays each RAT
// and checks the slot annotations against it.
void check_rats(const TaskSpec& task) {
  const auto world = task.initial_world(1.0);
  for (const Rat& rat : task.rats) {
    for (Agent a : kAgents) {
      for (std::size_t i = 0; i < rat.of(a).size(); ++i) {
        const Action& act = rat.of(a)[i];
        if (act.is_request)
          throw RatValidationError(task.name + " " + rat.id + ": RAT entries cannot be requests");
        if (auto err = lang::validate(act, a, world))
          throw RatValidationError(task.name + " " + rat.id + " " + std::string(to_string(a)) +
                                   "[" + std::to_string(i) + "] " + lang::canonical(act) + ": " +
                                   err->message);
      }
    }
    std::set<std::pair<Agent, std::size_t>> seen;
    for (const auto& slot : rat.slots) {
      if (slot.step >= rat.of(slot.agent).size())
        throw RatValidationError(task.name + " " + rat.id + ": slot step out of range");
      if (!seen.insert({slot.agent, slot.step}).second)
        throw RatValidationError(task.name + " " + rat.id + ": duplicate slot");
    }
  }
  for (std::size_t j = 0; j < task.rats.size(); ++j) {
    ReplayResult r = replay_rat(task, j, std::max(1000, task.min_timesteps * 4));
    if (!r.delivered)
      throw RatValidationError(task.name + " " + task.rats[j].id +
                               ": replay does not deliver the order");
    if (r.timesteps != task.min_timesteps)
      throw RatValidationError(task.name + " " + task.rats[j].id + ": replay takes " +
                               std::to_string(r.timesteps) + " timesteps but min_timesteps is " +
                               std::to_string(task.min_timesteps));
  }
}

}  // namespace

std::string_view to_string(SlotKind k) {
  switch (k) {
    case SlotKind::acquiring_new_ingredients: return "acquiring_new_ingredients";
    case SlotKind::alice_processing: return "alice_processing";
    case SlotKind::acquiring_dish: return "acquiring_dish";
    case SlotKind::bob_processing: return "bob_processing";
  }
  return "?";
}

std::optional<SlotKind> slot_kind_from_string(std::string_view s) {
  for (auto k : {SlotKind::acquiring_new_ingredients, SlotKind::alice_processing,
                 SlotKind::acquiring_dish, SlotKind::bob_processing})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

int time_limit(int min_timesteps, double gamma) {
  if (!(gamma > 0)) throw Error("time limit factor must be positive");
  return static_cast<int>(std::ceil(min_timesteps * gamma - 1e-9));
}

std::string TaskSpec::recipe_text() const {
  std::string out;
  for (const auto& line : recipe) {
    out += line;
    out += '\n';
  }
  return out;
}

int TaskSpec::time_limit(double gamma) const { return tasks::time_limit(min_timesteps, gamma); }

std::vector<std::vector<std::string>> TaskSpec::rat_strings(Agent a) const {
  std::vector<std::vector<std::string>> out;
  for (const auto& rat : rats) out.push_back(lang::canonical_all(rat.of(a)));
  return out;
}

env::WorldState TaskSpec::initial_world(double gamma) const {
  return env::initial_state(layout, order, time_limit(gamma));
}

std::shared_ptr<const env::Layout> parse_layout(const json& doc, const json& synthesis) {
  const std::string where = "layout";
  const json& elements = field(doc, "elements", where);
  if (!elements.is_array()) throw SchemaError("layout: 'elements' must be an array");
  if (!synthesis.is_null() && !synthesis.is_object())
    throw SchemaError("task: 'synthesis' must be an object keyed by utensil id");

  std::vector<env::ElementSpec> specs;
  std::set<std::string> used;
  for (const auto& e : elements) {
    env::ElementSpec spec;
    spec.id = string_field(e, "id", where);
    auto kind = env::element_kind_from_string(string_field(e, "kind", where));
    if (!kind) throw SchemaError("layout: unknown kind for '" + spec.id + "'");
    spec.kind = *kind;
    auto owner = env::owner_from_string(string_field(e, "owner", where));
    if (!owner) throw SchemaError("layout: unknown owner for '" + spec.id + "'");
    spec.owner = *owner;
    if (e.contains("items")) spec.items = string_list(e["items"], "layout." + spec.id + ".items");
    if (e.contains("capacity")) spec.capacity = e["capacity"].get<std::size_t>();
    if (e.contains("count")) spec.display_count = e["count"].get<int>();
    if (e.contains("listed_in_space_of")) {
      auto a = agent_from_string(e["listed_in_space_of"].get<std::string>());
      if (!a) throw SchemaError("layout: bad 'listed_in_space_of' for '" + spec.id + "'");
      spec.listed_in_space_of = *a;
    }
    if (!synthesis.is_null() && synthesis.contains(spec.id)) {
      if (spec.kind != env::ElementKind::utensil)
        throw SchemaError("task: synthesis given for non-utensil '" + spec.id + "'");
      spec.synthesis = parse_synthesis(synthesis[spec.id], "synthesis." + spec.id);
      used.insert(spec.id);
    }
    specs.push_back(std::move(spec));
  }
  if (!synthesis.is_null()) {
    for (const auto& [id, _] : synthesis.items())
      if (!used.count(id)) throw SchemaError("task: synthesis for unknown utensil '" + id + "'");
  }
  std::map<std::string, double> order_probability;
  if (doc.contains("order_probability"))
    order_probability = doc["order_probability"].get<std::map<std::string, double>>();
  try {
    return std::make_shared<const env::Layout>(std::move(specs), std::move(order_probability));
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(std::string("layout: ") + e.what());
  }
}

TaskSpec parse_task(const json& doc, const fs::path& layouts_dir) {
  if (!doc.is_object()) throw SchemaError("task document must be a JSON object");
  const json& version = field(doc, "schema_version", "task");
  if (!version.is_number_integer() || version.get<int>() != kTaskSchemaVersion)
    throw SchemaError("task: unsupported schema_version (expected " +
                      std::to_string(kTaskSchemaVersion) + ")");

  TaskSpec t;
  t.name = string_field(doc, "name", "task");
  const std::string where = "task " + t.name;
  if (!valid_item_name(t.name)) throw SchemaError(where + ": name must be snake_case");
  t.title = string_field(doc, "title", where);
  const json& level = field(doc, "level", where);
  if (!level.is_number_integer() || level.get<int>() < 1 || level.get<int>() > 6)
    throw SchemaError(where + ": level must be an integer in 1..6");
  t.level = level.get<int>();
  t.goal = string_field(doc, "goal", where);
  t.order = string_field(doc, "order", where);
  if (!valid_item_name(t.order)) throw SchemaError(where + ": order must be an item name");
  auto holder = agent_from_string(doc.value("knowledge_holder", std::string("bob")));
  if (!holder) throw SchemaError(where + ": bad knowledge_holder");
  t.knowledge_holder = *holder;
  t.recipe = string_list(field(doc, "recipe", where), where + ".recipe");
  const json& min_t = field(doc, "min_timesteps", where);
  if (!min_t.is_number_integer() || min_t.get<int>() < 1)
    throw SchemaError(where + ": min_timesteps must be a positive integer");
  t.min_timesteps = min_t.get<int>();
  t.time_limit_factor = doc.value("time_limit_factor", 1.5);
  if (!(t.time_limit_factor > 0)) throw SchemaError(where + ": time_limit_factor must be > 0");

  t.layout_name = string_field(doc, "layout", where);
  json layout_doc = read_json(layouts_dir / (t.layout_name + ".json"));
  t.layout = parse_layout(layout_doc, doc.contains("synthesis") ? doc["synthesis"] : json());
  if (!t.layout->knows_item(t.order))
    throw SchemaError(where + ": order '" + t.order + "' cannot be produced in this kitchen");

  const json& rats = field(doc, "rats", where);
  if (!rats.is_object() || rats.empty()) throw SchemaError(where + ": 'rats' must be a nonempty object");
  const json slots_doc = doc.value("collaboration_slots", json::object());
  for (const auto& [rat_id, body] : rats.items()) {
    Rat rat;
    rat.id = rat_id;
    for (Agent a : kAgents) {
      const std::string key = a == Agent::bob ? "agent_0" : "agent_1";
      auto lines = string_list(field(body, key.c_str(), where + "." + rat_id),
                               where + "." + rat_id + "." + key);
      for (const auto& line : lines) {
        auto parsed = lang::parse_action(line);
        if (!parsed)
          throw RatValidationError(where + " " + rat_id + ": cannot parse '" + line + "'");
        rat.per_agent[index_of(a)].push_back(*parsed);
      }
      if (rat.per_agent[index_of(a)].empty())
        throw RatValidationError(where + " " + rat_id + ": empty RAT for " +
                                 std::string(to_string(a)));
    }
    if (slots_doc.contains(rat_id)) {
      for (const auto& s : slots_doc[rat_id]) {
        CollaborationSlot slot;
        auto a = agent_from_string(string_field(s, "agent", where + " slot"));
        auto k = slot_kind_from_string(string_field(s, "kind", where + " slot"));
        if (!a || !k) throw SchemaError(where + ": bad collaboration slot");
        const json& step = field(s, "step", where + " slot");
        if (!step.is_number_integer() || step.get<int>() < 0)
          throw SchemaError(where + ": slot step must be a non-negative integer");
        slot.agent = *a;
        slot.kind = *k;
        slot.step = step.get<std::size_t>();
        rat.slots.push_back(slot);
      }
    }
    t.rats.push_back(std::move(rat));
  }
  // json objects iterate in key order, so RAT_1 < RAT_2 < ...; keep it explicit.
  std::sort(t.rats.begin(), t.rats.end(), [](const Rat& a, const Rat& b) { return a.id < b.id; });
  check_rats(t);
  return t;
}

TaskSpec load_task(const fs::path& path) {
  json doc = read_json(path);
  TaskSpec t = parse_task(doc, path.parent_path() / "layouts");
  t.source = path;
  return t;
}

std::vector<CollaborationSlot> required_collaborations(const TaskSpec& task) {
  if (task.rats.empty()) return {};
  return task.rats.front().slots;
}

ReplayResult replay_rat(const TaskSpec& task, std::size_t rat_index, int max_timesteps) {
  if (rat_index >= task.rats.size()) throw Error("replay_rat: no such RAT");
  const Rat& rat = task.rats[rat_index];
  env::WorldState world = env::initial_state(task.layout, task.order, max_timesteps);
  std::array<std::size_t, 2> next{0, 0};
  ReplayResult out;
  while (world.timestep < max_timesteps) {
    for (Agent a : kAgents) {
      const auto& seq = rat.of(a);
      std::size_t& i = next[index_of(a)];
      if (i >= seq.size()) continue;
      env::StepOutcome o = env::apply_action(world, a, seq[i]);
      const env::AgentResult& r = o.per_agent_results[a];
      if (!r.accepted || r.error) continue;
      world = std::move(o.new_state);
      out.executed[index_of(a)].emplace_back(world.timestep, seq[i]);
      ++i;
    }
    if (world.delivered) {
      out.delivered = true;
      out.timesteps = world.timestep + 1;
      return out;
    }
    world = env::tick(world);
  }
  out.timesteps = world.timestep;
  return out;
}

json to_json(const TaskSummary& s) {
  return json{{"name", s.name},
              {"title", s.title},
              {"level", s.level},
              {"min_timesteps", s.min_timesteps},
              {"min_actions", s.min_actions},
              {"min_collab_actions", s.min_collab_actions}};
}

Registry Registry::load_dir(const fs::path& dir) {
  Registry reg;
  if (!fs::is_directory(dir)) throw SchemaError("task directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::set<std::string> names;
  for (const auto& f : files) {
    TaskSpec t = load_task(f);
    if (!names.insert(t.name).second) throw SchemaError("duplicate task name '" + t.name + "'");
    reg.tasks_.push_back(std::move(t));
  }
  std::sort(reg.tasks_.begin(), reg.tasks_.end(), [](const TaskSpec& a, const TaskSpec& b) {
    return std::tie(a.level, a.name) < std::tie(b.level, b.name);
  });
  return reg;
}

const TaskSpec* Registry::find(std::string_view name) const {
  for (const auto& t : tasks_)
    if (t.name == name) return &t;
  return nullptr;
}

const TaskSpec& Registry::get(std::string_view name) const {
  if (const TaskSpec* t = find(name)) return *t;
  throw Error("unknown task '" + std::string(name) + "'");
}

std::vector<TaskSummary> Registry::catalog(std::optional<int> level) const {
  std::vector<TaskSummary> out;
  for (const auto& t : tasks_) {
    if (level && t.level != *level) continue;
    out.push_back(TaskSummary{t.name, t.title, t.level, t.min_timesteps,
                              static_cast<int>(t.rats.front().total_actions()),
                              static_cast<int>(required_collaborations(t).size())});
  }
  return out;
}

}  // namespace collab::tasks
