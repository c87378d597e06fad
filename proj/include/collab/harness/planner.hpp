#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "collab/common.hpp"

namespace collab::harness {

inline constexpr std::string_view kNothing = "[NOTHING]";
inline constexpr std::string_view kEnd = "[END]";

// The three fields every planner reply must carry.
struct PlannerOutput {
  std::string analysis;
  std::string say;
  std::string plan;

  bool operator==(const PlannerOutput&) const = default;

  // True when the agent chose not to speak.
  bool silent() const;
  bool ends_conversation() const;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// Accepts "Analysis:", "Say:" and "Plan:" headers in any order and case,
// optionally prefixed by the speaker ("Bob plan: ..."). Text after a header
// runs until the next header. Returns nullopt and fills `why` when a field is
// missing.
std::optional<PlannerOutput> parse_planner_output(std::string_view text,
                                                  std::string* why = nullptr);

std::string format_planner_output(const PlannerOutput& out);

}  // namespace collab::harness
