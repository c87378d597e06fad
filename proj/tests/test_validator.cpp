#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "collab/lang/validator.hpp"
#include "support.hpp"

using namespace collab;
using collab::testing::task;

namespace {

env::WorldState world() { return task("baked_pumpkin_soup").initial_world(1.5); }

std::optional<lang::ValidationError> check(const std::string& text, Agent a) {
  auto parsed = lang::parse_plan(text);
  if (!parsed.ok()) return lang::from_parse_error(*parsed.error);
  EXPECT_EQ(parsed.actions.size(), 1u) << text;
  return lang::validate(parsed.actions.at(0), a, world());
}

}  // namespace

TEST(Validator, AcceptsEveryRatAction) {
  for (const auto& t : collab::testing::registry().tasks()) {
    auto w = t.initial_world(1.5);
    for (const auto& rat : t.rats)
      for (Agent a : kAgents)
        for (const auto& act : rat.of(a)) EXPECT_FALSE(lang::validate(act, a, w)) << t.name << " " << lang::canonical(act);
  }
}

TEST(Validator, PaperFailureIsUnknownArgument) {
  auto e = check("pickup(cauliflower, dispenser)", Agent::alice);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->code, lang::ValidationCode::unknown_argument);
  EXPECT_EQ(lang::to_string(e->code), "UnknownArgument");
  EXPECT_NE(e->message.find("dispenser is not a valid place"), std::string::npos);
}

TEST(Validator, CodesInCheckOrder) {
  using C = lang::ValidationCode;
  EXPECT_EQ(check("fly(pot0)", Agent::bob)->code, C::unknown_function);
  EXPECT_EQ(check("cut(chopping_board0)", Agent::bob)->code, C::not_in_action_space);
  EXPECT_EQ(check("deliver()", Agent::alice)->code, C::not_in_action_space);
  EXPECT_EQ(check("pickup(egg)", Agent::alice)->code, C::bad_arity);
  EXPECT_EQ(check("fly(pot0, oven0)", Agent::bob)->code, C::unknown_function);
  EXPECT_EQ(check("pickup(unicorn, ingredient_dispenser)", Agent::alice)->code, C::unknown_argument);
  EXPECT_EQ(check("wait(0)", Agent::alice)->code, C::unknown_argument);
  EXPECT_EQ(check("wait(two)", Agent::alice)->code, C::unknown_argument);
  EXPECT_EQ(check("put_obj_in_utensil(delivery)", Agent::bob)->code, C::unknown_argument);
  EXPECT_EQ(check("pickup(egg, ingredient_dispenser)", Agent::bob)->code, C::environment_mismatch);
  EXPECT_EQ(check("pickup(dish, ingredient_dispenser)", Agent::alice)->code, C::environment_mismatch);
  EXPECT_EQ(check("put_obj_in_utensil(counter)", Agent::bob)->code, C::environment_mismatch);
  EXPECT_EQ(check("bake(pot0)", Agent::bob)->code, C::environment_mismatch);
  EXPECT_EQ(check("cut(", Agent::alice)->code, C::parse_error);
}

TEST(Validator, RequestWrapperIsIgnored) {
  auto a = collab::testing::act("request('cut(chopping_board0)')");
  EXPECT_FALSE(lang::validate(a, Agent::alice, world()));
  EXPECT_TRUE(lang::validate(a, Agent::bob, world()));
}

TEST(Validator, DoesNotLookAtDynamicState) {
  // Holding nothing is an environment concern, not a validation failure.
  EXPECT_FALSE(check("put_obj_in_utensil(pot0)", Agent::bob));
  EXPECT_FALSE(check("fill_dish_with_food(oven0)", Agent::bob));
}

TEST(Validator, ActionSpaces) {
  EXPECT_EQ(lang::action_space(Agent::alice),
            (std::vector<std::string>{"pickup", "cut", "stir", "place_obj_on_counter", "put_obj_in_utensil", "wait"}));
  EXPECT_EQ(lang::action_space(Agent::bob).size(), 8u);
  EXPECT_EQ(lang::arity("pickup"), 2u);
  EXPECT_EQ(lang::arity("deliver"), 0u);
  EXPECT_FALSE(lang::arity("fly"));
}

// Each golden line: agent <TAB> plan text <TAB> code <TAB> message.
TEST(Validator, GoldenMessages) {
  std::ifstream in(std::string(COLLAB_GOLDEN_DIR) + "/validation_messages.txt");
  ASSERT_TRUE(in);
  std::string line;
  int cases = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    ASSERT_EQ(cols.size(), 4u) << line;
    auto agent = agent_from_string(cols[0]);
    ASSERT_TRUE(agent) << line;
    auto e = check(cols[1], *agent);
    ASSERT_TRUE(e) << line;
    EXPECT_EQ(lang::to_string(e->code), cols[2]) << line;
    EXPECT_EQ(e->message, cols[3]) << line;
    ++cases;
  }
  EXPECT_GE(cases, 10);
}
