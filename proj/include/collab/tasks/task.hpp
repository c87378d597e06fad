#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "collab/common.hpp"
#include "collab/env/layout.hpp"
#include "collab/env/world.hpp"
#include "collab/lang/action.hpp"
#include "json.hpp"

namespace collab::tasks {

inline constexpr int kTaskSchemaVersion = 1;

class SchemaError : public Error {
 public:
  using Error::Error;
};

class RatValidationError : public Error {
 public:
  using Error::Error;
};

// The four collaborative behaviours a slot can serve.
enum class SlotKind { acquiring_new_ingredients, alice_processing, acquiring_dish, bob_processing };

std::string_view to_string(SlotKind k);
std::optional<SlotKind> slot_kind_from_string(std::string_view s);

// A RAT position where `agent` acts on its partner's behalf. `step` indexes
// that agent's RAT.
struct CollaborationSlot {
  Agent agent = Agent::alice;
  std::size_t step = 0;
  SlotKind kind = SlotKind::acquiring_new_ingredients;

  bool operator==(const CollaborationSlot&) const = default;
};

struct Rat {
  std::string id;  // "RAT_1"
  std::array<std::vector<Action>, 2> per_agent;
  std::vector<CollaborationSlot> slots;

  const std::vector<Action>& of(Agent a) const { return per_agent[index_of(a)]; }
  std::size_t total_actions() const { return per_agent[0].size() + per_agent[1].size(); }
};

struct TaskSpec {
  std::string name;   // "baked_pumpkin_soup"
  std::string title;  // "Baked Pumpkin Soup"
  int level = 0;
  std::string goal;
  std::string order;  // item that must be delivered
  Agent knowledge_holder = Agent::bob;
  std::vector<std::string> recipe;  // verbatim lines, NAME / INGREDIENTS / COOKING STEPs
  int min_timesteps = 0;
  double time_limit_factor = 1.5;
  std::string layout_name;
  std::shared_ptr<const env::Layout> layout;
  std::vector<Rat> rats;
  std::filesystem::path source;

  std::string recipe_text() const;
  int time_limit(double gamma) const;
  // Canonical RAT strings for one agent, one entry per RAT.
  std::vector<std::vector<std::string>> rat_strings(Agent a) const;
  env::WorldState initial_world(double gamma) const;
};

// ceil(min_timesteps * gamma), robust to floating error on exact products.
int time_limit(int min_timesteps, double gamma);

// Parses a layout document and attaches per-utensil synthesis tables.
std::shared_ptr<const env::Layout> parse_layout(const nlohmann::json& layout_doc,
                                                const nlohmann::json& synthesis);

// Builds and fully validates a task. Layout documents are looked up by name
// in `layouts_dir`.
TaskSpec parse_task(const nlohmann::json& doc, const std::filesystem::path& layouts_dir);

// Loads `path`; layouts are read from `<dir of path>/layouts/`.
TaskSpec load_task(const std::filesystem::path& path);

// The collaboration slots of RAT 0: the denominator N of IC and RC.
std::vector<CollaborationSlot> required_collaborations(const TaskSpec& task);

struct ReplayResult {
  bool delivered = false;
  int timesteps = 0;  // ticks consumed, including the delivery step
  std::array<std::vector<std::pair<int, Action>>, 2> executed;
};

// Plays one RAT with both agents acting in parallel. Each agent issues its
// next RAT action when the world accepts it and idles otherwise.
ReplayResult replay_rat(const TaskSpec& task, std::size_t rat_index = 0,
                        int max_timesteps = 1000);

struct TaskSummary {
  std::string name;
  std::string title;
  int level = 0;
  int min_timesteps = 0;
  int min_actions = 0;
  int min_collab_actions = 0;

  bool operator==(const TaskSummary&) const = default;
};

nlohmann::json to_json(const TaskSummary& s);

// Immutable after load; safe to share across threads.
class Registry {
 public:
  Registry() = default;
  static Registry load_dir(const std::filesystem::path& dir);

  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  const TaskSpec* find(std::string_view name) const;
  const TaskSpec& get(std::string_view name) const;
  // Sorted by (level, name).
  std::vector<TaskSummary> catalog(std::optional<int> level = std::nullopt) const;

 private:
  std::vector<TaskSpec> tasks_;
};

}  // namespace collab::tasks
