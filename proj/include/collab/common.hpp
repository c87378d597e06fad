#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace collab {

// The two agents of the benchmark. Bob holds the recipe and owns the pot,
// oven and delivery; Alice owns the dispensers, chopping board and blender.
// The enumerator order is also the in-timestep execution order.
enum class Agent { bob = 0, alice = 1 };

inline constexpr std::array<Agent, 2> kAgents = {Agent::bob, Agent::alice};

constexpr std::size_t index_of(Agent a) { return static_cast<std::size_t>(a); }

constexpr Agent partner_of(Agent a) {
  return a == Agent::bob ? Agent::alice : Agent::bob;
}

inline std::string_view to_string(Agent a) {
  return a == Agent::bob ? "bob" : "alice";
}

// Display name used in prompts ("Bob", "Alice").
inline std::string_view display_name(Agent a) {
  return a == Agent::bob ? "Bob" : "Alice";
}

inline std::optional<Agent> agent_from_string(std::string_view s) {
  if (s == "bob" || s == "Bob" || s == "agent_0") return Agent::bob;
  if (s == "alice" || s == "Alice" || s == "agent_1") return Agent::alice;
  return std::nullopt;
}

// Base for all configuration and protocol errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace collab
