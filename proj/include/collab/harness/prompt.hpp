#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "collab/common.hpp"
#include "collab/env/world.hpp"
#include "collab/harness/report.hpp"
#include "collab/tasks/task.hpp"

namespace collab::harness {

class TemplateSlotMissing : public Error {
 public:
  using Error::Error;
};

// Replaces every {{name}} with slots[name]. Unknown names throw
// TemplateSlotMissing; unused slots are ignored.
std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& slots);

// Slots are rendered in this order after the fixed sections:
// recipe, memory, observation, conversation, reflection, error_feedback.
// memory precedes observation so the text reads like the kitchen log shown to
// agents: history first, then the scene.
inline constexpr std::string_view kPromptTemplate =
    "{{game_rules}}\n\n{{communication_rules}}\n\n{{action_space}}\n\n{{output_format}}\n\n"
    "{{recipe}}{{memory}}\n{{observation}}\n{{conversation}}{{reflection}}{{error_feedback}}";

struct PromptBundle {
  Agent agent = Agent::bob;
  std::string game_rules;
  std::string communication_rules;
  std::string action_space;
  std::string output_format;
  std::optional<std::string> recipe;  // knowledge holder only
  std::string memory;
  std::string observation;
  std::string conversation;
  std::string reflection;
  std::string error_feedback;

  // Fixed sections only; remote backends send this as the system message.
  std::string system_text() const;
  // Slot sections only.
  std::string user_text() const;
  std::string render(std::string_view tpl = kPromptTemplate) const;
};

struct PromptInputs {
  Agent agent = Agent::bob;
  const env::WorldState* world = nullptr;
  const tasks::TaskSpec* task = nullptr;
  std::vector<std::string> memory;      // accepted actions, oldest first
  std::vector<std::string> reflection;  // notes written after failures
  std::vector<ConversationTurn> conversation;
  std::vector<Action> incoming_request;  // actions the partner asked for
  std::string error;                     // feedback from the last rejection
};

PromptBundle build_prompt(const PromptInputs& in);

std::string action_space_text(Agent agent);

}  // namespace collab::harness
