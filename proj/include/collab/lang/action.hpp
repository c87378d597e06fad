#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace collab {

// A single primitive `func(args)`, optionally wrapped in `request(...)` when
// one agent asks the other to perform it.
struct Action {
  std::string func;
  std::vector<std::string> args;
  bool is_request = false;

  bool operator==(const Action&) const = default;

  bool is_wait() const { return func == "wait"; }

  // The same action with the request wrapper removed.
  Action unwrapped() const {
    Action a = *this;
    a.is_request = false;
    return a;
  }
};

namespace lang {

struct ParseError {
  std::size_t offset = 0;  // byte offset into the original text
  std::string token;       // offending token (may be empty at end of input)
  std::string message;

  bool operator==(const ParseError&) const = default;
};

struct ParseResult {
  std::vector<Action> actions;
  std::optional<ParseError> error;

  bool ok() const { return !error.has_value(); }
};

// Parses a planner "Plan" field. Actions are separated by `;`, newlines or
// top-level commas; `request(...)` wraps one inner call, quoted or not.
// Trailing protocol tokens such as "[END]" are stripped. Never throws.
ParseResult parse_plan(std::string_view text);

// Convenience for exactly one action; nullopt on any parse failure or when the
// text holds zero or several actions.
std::optional<Action> parse_action(std::string_view text);

// Lowercase snake_case form of an identifier ("Bell Pepper" -> "bell_pepper",
// "ChoppingBoard0" -> "chopping_board0").
std::string canonical_identifier(std::string_view raw);

// "pickup(apple,ingredient_dispenser)", "request(cut(chopping_board0))".
std::string canonical(const Action& action);

std::vector<std::string> canonical_all(const std::vector<Action>& actions);

// Canonical actions joined with "," inside brackets, as shown in prompts.
std::string render_plan(const std::vector<Action>& actions);

}  // namespace lang
}  // namespace collab
