#include "collab/harness/prompt.hpp"

#include "collab/lang/validator.hpp"

namespace collab::harness {
namespace {

std::string game_rules(Agent self) {
  const std::string me(display_name(self));
  const std::string other(display_name(partner_of(self)));
  return "GAME RULES\n"
         "You are " + me + ", one of two chefs in a kitchen. Your teammate is " + other + ".\n"
         "Each chef can only use the elements in their own space. The counter is the only "
         "element both chefs can reach, so items move between chefs by placing them on the "
         "counter.\n"
         "Every action takes one timestep. Utensils turn their contents into a new item "
         "after the stated number of timesteps; the item can then be picked up from the "
         "utensil.\n"
         "Hold at most one item at a time. The order is complete when the finished item is "
         "delivered. Delivering the wrong item removes it from the kitchen.\n"
         "The game ends when the order is delivered or when time runs out.";
}

std::string communication_rules(Agent self) {
  const std::string other(display_name(partner_of(self)));
  return "COMMUNICATION RULES\n"
         "Use Say to talk to " + other + ". Write [NOTHING] in Say when you have nothing to "
         "say. Add [END] to the end of your message to close the conversation.\n"
         "To ask " + other + " to perform actions, put each one in your Plan wrapped as "
         "request(action), for example request(place_obj_on_counter()). Requested actions "
         "are not performed by you.";
}

std::string output_format() {
  return "OUTPUT FORMAT\n"
         "Reply with exactly three fields:\n"
         "Analysis: your reasoning about the current scene\n"
         "Say: a message for your teammate, or [NOTHING]\n"
         "Plan: actions separated by ';', for example pickup(onion, ingredient_dispenser); "
         "place_obj_on_counter()";
}

std::string signature(const std::string& f) {
  if (f == "pickup") return "pickup(obj, place)";
  if (f == "cut") return "cut(chopping_board_name)";
  if (f == "stir") return "stir(blender_name)";
  if (f == "cook") return "cook(pot_name)";
  if (f == "bake") return "bake(oven_name)";
  if (f == "place_obj_on_counter") return "place_obj_on_counter()";
  if (f == "put_obj_in_utensil") return "put_obj_in_utensil(utensil)";
  if (f == "fill_dish_with_food") return "fill_dish_with_food(utensil)";
  if (f == "deliver") return "deliver()";
  if (f == "wait") return "wait(num)";
  return f + "()";
}

std::string describe(const std::string& f) {
  if (f == "pickup") return "pick up obj from a dispenser, utensil or the counter";
  if (f == "cut") return "cut the contents of a chopping board";
  if (f == "stir") return "mash the contents of a blender";
  if (f == "cook") return "cook the contents of a pot";
  if (f == "bake") return "bake the contents of an oven";
  if (f == "place_obj_on_counter") return "put the held item on the counter";
  if (f == "put_obj_in_utensil") return "put the held item into a utensil";
  if (f == "fill_dish_with_food") return "fill the held dish with the food in a utensil";
  if (f == "deliver") return "deliver the held item";
  if (f == "wait") return "do nothing for num timesteps";
  return "";
}

std::string conversation_text(const std::vector<ConversationTurn>& turns,
                              const std::vector<Action>& request, Agent self) {
  std::string out;
  if (!turns.empty()) {
    out += "Conversation:\n";
    for (const auto& t : turns) out += std::string(display_name(t.speaker)) + ": " + t.text + "\n";
  }
  if (!request.empty()) {
    out += std::string(display_name(partner_of(self))) + " requests you to perform: " +
           lang::render_plan(request) + "\n";
  }
  return out;
}

}  // namespace

std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& slots) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    std::size_t open = tpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tpl.substr(pos));
      break;
    }
    std::size_t close = tpl.find("}}", open + 2);
    if (close == std::string_view::npos) throw TemplateSlotMissing("unterminated slot in template");
    out.append(tpl.substr(pos, open - pos));
    std::string name(tpl.substr(open + 2, close - open - 2));
    auto it = slots.find(name);
    if (it == slots.end()) throw TemplateSlotMissing("template slot '" + name + "' has no value");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

std::string action_space_text(Agent agent) {
  std::string out = "ACTION SPACE for " + std::string(display_name(agent)) + "\n";
  int i = 1;
  for (const auto& f : lang::action_space(agent))
    out += "    " + std::to_string(i++) + ". " + signature(f) + ": " + describe(f) + "\n";
  return out.substr(0, out.size() - 1);
}

std::string PromptBundle::system_text() const {
  return game_rules + "\n\n" + communication_rules + "\n\n" + action_space + "\n\n" + output_format;
}

std::string PromptBundle::user_text() const {
  return (recipe ? *recipe : std::string()) + memory + "\n" + observation + "\n" + conversation +
         reflection + error_feedback;
}

std::string PromptBundle::render(std::string_view tpl) const {
  return render_template(tpl, {{"game_rules", game_rules},
                               {"communication_rules", communication_rules},
                               {"action_space", action_space},
                               {"output_format", output_format},
                               {"recipe", recipe ? *recipe : std::string()},
                               {"memory", memory},
                               {"observation", observation},
                               {"conversation", conversation},
                               {"reflection", reflection},
                               {"error_feedback", error_feedback}});
}

PromptBundle build_prompt(const PromptInputs& in) {
  if (!in.world || !in.task) throw Error("build_prompt: world and task are required");
  PromptBundle b;
  b.agent = in.agent;
  b.game_rules = game_rules(in.agent);
  b.communication_rules = communication_rules(in.agent);
  b.action_space = action_space_text(in.agent);
  b.output_format = output_format();
  if (in.agent == in.task->knowledge_holder) b.recipe = "RECIPE\n" + in.task->recipe_text() + "\n";

  std::string history = "[";
  for (std::size_t i = 0; i < in.memory.size(); ++i) {
    if (i) history += ",";
    history += in.memory[i];
  }
  b.memory = "Successful Action History: " + history + "]";
  b.observation = env::observe(*in.world, in.agent);
  b.conversation = conversation_text(in.conversation, in.incoming_request, in.agent);
  if (!in.reflection.empty()) {
    b.reflection = "Reflection:\n";
    for (const auto& r : in.reflection) b.reflection += "- " + r + "\n";
  }
  if (!in.error.empty()) b.error_feedback = "Error: " + in.error + "\n";
  return b;
}

}  // namespace collab::harness
