#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "collab/common.hpp"
#include "collab/env/layout.hpp"
#include "collab/lang/action.hpp"
#include "json.hpp"

namespace collab::env {

struct Processing {
  std::string process;
  std::string output;
  int remaining = 0;

  bool operator==(const Processing&) const = default;
};

struct ElementState {
  std::vector<std::string> contents;  // sorted multiset
  std::optional<Processing> processing;

  bool operator==(const ElementState&) const = default;
};

struct AgentState {
  std::optional<std::string> holding;
  std::vector<Action> pending_plan;

  bool operator==(const AgentState&) const = default;
};

struct WorldState {
  std::shared_ptr<const Layout> layout;
  int timestep = 0;
  int time_limit = 0;
  std::string order;
  bool delivered = false;
  std::array<AgentState, 2> agents;
  std::map<std::string, ElementState> elements;  // utensils and the counter
  std::vector<std::string> wrong_deliveries;

  AgentState& agent(Agent a) { return agents[index_of(a)]; }
  const AgentState& agent(Agent a) const { return agents[index_of(a)]; }

  bool operator==(const WorldState& other) const;
};

WorldState initial_state(std::shared_ptr<const Layout> layout, std::string order,
                         int time_limit);

enum class StepErrorCode {
  no_such_element,
  element_not_in_agent_space,
  hands_full,
  hands_empty,
  item_not_present,
  dish_required,
  no_matching_synthesis_entry,
  utensil_busy,
  counter_full,
  wrong_delivery,
};

std::string_view to_string(StepErrorCode code);

struct StepError {
  StepErrorCode code;
  std::string message;

  bool operator==(const StepError&) const = default;
};

struct AgentResult {
  bool accepted = false;
  std::optional<StepError> error;
};

struct StepOutcome {
  WorldState new_state;
  std::map<Agent, AgentResult> per_agent_results;
  std::optional<bool> delivered_correct;
};

// Executes one primitive for one agent. Rejected actions return the input
// state unchanged. A wrong delivery is accepted (the item is consumed) but
// carries a wrong_delivery error and delivered_correct=false.
StepOutcome apply_action(const WorldState& state, Agent agent, const Action& action);

// Both agents' actions for one timestep, applied Bob first, then Alice.
// Agents without an action (nullopt) stay idle. Does not tick.
StepOutcome step(const WorldState& state, const std::array<std::optional<Action>, 2>& actions);

class TimeLimitExceeded : public Error {
 public:
  TimeLimitExceeded() : Error("time limit exceeded") {}
};

// Advances the clock by one and progresses every running synthesis.
WorldState tick(const WorldState& state);

// The shared observation text both agents receive, phrased from the viewpoint
// of `viewer` ("3 counters can be visited by <Bob>").
std::string observe(const WorldState& state, Agent viewer);

// "Bob space:pot0  oven0  counter" style line.
std::string space_line(const Layout& layout, Agent owner);

// Canonical serialization with sorted keys; stable byte-for-byte.
nlohmann::json to_json(const WorldState& state);

// Multiset of every item present in the world (hands, utensils, counter).
std::map<std::string, int> item_census(const WorldState& state);

}  // namespace collab::env
