#include "collab/lang/validator.hpp"

#include <algorithm>

namespace collab::lang {
namespace {

using env::ElementKind;
using env::ElementSpec;

std::string list(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += v[i];
  }
  return out;
}

bool contains(const std::vector<std::string>& v, std::string_view x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

bool is_process(std::string_view f) {
  return f == "cut" || f == "stir" || f == "cook" || f == "bake";
}

ValidationError err(ValidationCode code, std::string message) {
  return ValidationError{code, std::move(message)};
}

std::vector<std::string> element_ids(const env::Layout& layout) {
  std::vector<std::string> ids;
  for (const auto& el : layout.elements())
    if (el.kind != ElementKind::delivery) ids.push_back(el.id);
  return ids;
}

}  // namespace

std::string_view to_string(ValidationCode code) {
  switch (code) {
    case ValidationCode::parse_error: return "ParseError";
    case ValidationCode::unknown_function: return "UnknownFunction";
    case ValidationCode::bad_arity: return "BadArity";
    case ValidationCode::unknown_argument: return "UnknownArgument";
    case ValidationCode::environment_mismatch: return "EnvironmentMismatch";
    case ValidationCode::not_in_action_space: return "NotInActionSpace";
  }
  return "?";
}

const std::vector<std::string>& action_space(Agent agent) {
  static const std::vector<std::string> alice = {
      "pickup", "cut", "stir", "place_obj_on_counter", "put_obj_in_utensil", "wait"};
  static const std::vector<std::string> bob = {
      "pickup", "cook", "place_obj_on_counter", "put_obj_in_utensil",
      "fill_dish_with_food", "bake", "deliver", "wait"};
  return agent == Agent::alice ? alice : bob;
}

std::optional<std::size_t> arity(std::string_view func) {
  if (func == "pickup") return 2;
  if (func == "place_obj_on_counter" || func == "deliver") return 0;
  if (func == "put_obj_in_utensil" || func == "fill_dish_with_food" || func == "wait" ||
      is_process(func))
    return 1;
  return std::nullopt;
}

std::optional<ValidationError> validate(const Action& action, Agent agent,
                                        const env::WorldState& state) {
  const std::string& f = action.func;
  const std::string who(display_name(agent));
  const auto& space = action_space(agent);

  if (!contains(space, f)) {
    if (!arity(f))
      return err(ValidationCode::unknown_function,
                 f + " is not a valid action. " + who + " can use: " + list(space) + ".");
    return err(ValidationCode::not_in_action_space,
               f + " is not in " + who + "'s action space. " + who + " can use: " + list(space) +
                   ".");
  }

  std::size_t want = *arity(f);
  if (action.args.size() != want)
    return err(ValidationCode::bad_arity, canonical(action.unwrapped()) + " takes " +
                                              std::to_string(want) + " argument(s), got " +
                                              std::to_string(action.args.size()) + ".");

  const env::Layout& layout = *state.layout;
  const std::string shown = canonical(action.unwrapped());

  if (f == "wait") {
    const std::string& n = action.args[0];
    bool digits = !n.empty() && std::all_of(n.begin(), n.end(), [](char c) {
      return c >= '0' && c <= '9';
    });
    if (!digits || n.size() > 6 || std::stol(n) < 1)
      return err(ValidationCode::unknown_argument,
                 "In " + shown + ", " + n + " is not a positive number of timesteps.");
    return std::nullopt;
  }

  // Argument existence.
  const ElementSpec* el = nullptr;
  if (f == "pickup") {
    if (!layout.knows_item(action.args[0]))
      return err(ValidationCode::unknown_argument,
                 "In " + shown + ", " + action.args[0] + " is not a known item.");
  }
  if (want > 0) {
    const std::string& place = action.args.back();
    el = layout.find(place);
    if (!el || el->kind == ElementKind::delivery)
      return err(ValidationCode::unknown_argument,
                 "In " + shown + ", " + place + " is not a valid place. Valid places are: " +
                     list(element_ids(layout)) + ".");
  }

  // Reachability and compatibility with the layout.
  if (el && !env::reachable_by(el->owner, agent))
    return err(ValidationCode::environment_mismatch,
               "In " + shown + ", " + el->id + " is not in " + who + "'s space.");
  if (f == "pickup" && el->kind == ElementKind::dispenser && !contains(el->items, action.args[0]))
    return err(ValidationCode::environment_mismatch,
               "In " + shown + ", " + el->id + " does not provide " + action.args[0] + ".");
  if ((f == "put_obj_in_utensil" || f == "fill_dish_with_food") &&
      el->kind != ElementKind::utensil)
    return err(ValidationCode::environment_mismatch,
               "In " + shown + ", " + el->id + " is not a utensil.");
  if (is_process(f) && (el->kind != ElementKind::utensil || !el->processes().count(f)))
    return err(ValidationCode::environment_mismatch,
               "In " + shown + ", " + el->id + " cannot " + f + ".");
  if (f == "deliver") {
    bool reachable = std::any_of(layout.elements().begin(), layout.elements().end(),
                                 [&](const ElementSpec& e) {
                                   return e.kind == ElementKind::delivery &&
                                          env::reachable_by(e.owner, agent);
                                 });
    if (!reachable)
      return err(ValidationCode::environment_mismatch,
                 "In " + shown + ", the delivery location is not in " + who + "'s space.");
  }
  return std::nullopt;
}

ValidationError from_parse_error(const ParseError& error) {
  std::string msg = "Could not parse the plan at offset " + std::to_string(error.offset);
  if (!error.token.empty()) msg += " near '" + error.token + "'";
  msg += ": " + error.message + ".";
  return err(ValidationCode::parse_error, std::move(msg));
}

}  // namespace collab::lang
