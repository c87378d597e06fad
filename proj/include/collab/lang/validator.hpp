#pragma once

#include <optional>
#include <string>
#include <vector>

#include "collab/common.hpp"
#include "collab/env/world.hpp"
#include "collab/lang/action.hpp"

namespace collab::lang {

enum class ValidationCode {
  parse_error,
  unknown_function,
  bad_arity,
  unknown_argument,
  environment_mismatch,
  not_in_action_space,
};

std::string_view to_string(ValidationCode code);

struct ValidationError {
  ValidationCode code;
  std::string message;  // fed back verbatim into the agent's next prompt

  bool operator==(const ValidationError&) const = default;
};

// Functions each agent may call, in prompt order.
const std::vector<std::string>& action_space(Agent agent);

// Number of arguments `func` takes; nullopt for functions outside both spaces.
std::optional<std::size_t> arity(std::string_view func);

// Checks in order: action-space membership, arity, argument existence in the
// layout, reachability / utensil compatibility. The request wrapper is
// ignored; callers validate requested actions against the partner. Pure.
std::optional<ValidationError> validate(const Action& action, Agent agent,
                                        const env::WorldState& state);

ValidationError from_parse_error(const ParseError& error);

}  // namespace collab::lang
