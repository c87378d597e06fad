#include <gtest/gtest.h>

#include "collab/lang/action.hpp"

using namespace collab;
using lang::parse_plan;

namespace {

std::vector<std::string> canon(std::string_view text) {
  auto r = parse_plan(text);
  EXPECT_TRUE(r.ok()) << text << ": " << (r.error ? r.error->message : "");
  return lang::canonical_all(r.actions);
}

}  // namespace

TEST(Parser, SemicolonSeparatedPlan) {
  EXPECT_EQ(canon("pickup(bell_pepper, ingredient_dispenser); place_obj_on_counter()"),
            (std::vector<std::string>{"pickup(bell_pepper,ingredient_dispenser)", "place_obj_on_counter()"}));
}

TEST(Parser, QuotedRequestsWithMixedSpacing) {
  auto r = parse_plan("request('pickup(cauliflower, ingredient_dispenser)'); request('put_obj_in_utensil(chopping_board0)');request('cut(chopping_board0)'); request('place_obj_on_counter()')  ");
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.actions.size(), 4u);
  for (const auto& a : r.actions) EXPECT_TRUE(a.is_request);
  EXPECT_EQ(lang::canonical(r.actions[2]), "request(cut(chopping_board0))");
  EXPECT_EQ(r.actions[2].unwrapped(), (Action{"cut", {"chopping_board0"}, false}));
}

TEST(Parser, UnquotedAndDoubleQuotedRequests) {
  EXPECT_EQ(canon("request(cut(chopping_board0)); request(\"stir(blender0)\")"),
            (std::vector<std::string>{"request(cut(chopping_board0))", "request(stir(blender0))"}));
}

TEST(Parser, TopLevelCommasSeparateActions) {
  EXPECT_EQ(canon("pickup(pumpkin, ingredient_dispenser), put_obj_in_utensil(chopping_board0),cut(chopping_board0)"),
            (std::vector<std::string>{"pickup(pumpkin,ingredient_dispenser)",
                                      "put_obj_in_utensil(chopping_board0)", "cut(chopping_board0)"}));
}

TEST(Parser, NewlinesBulletsAndBracketList) {
  EXPECT_EQ(canon("1. wait(2)\n2) deliver()\n- cook(pot0)"),
            (std::vector<std::string>{"wait(2)", "deliver()", "cook(pot0)"}));
  EXPECT_EQ(canon("[pickup(dish, dish_dispenser), place_obj_on_counter()]"),
            (std::vector<std::string>{"pickup(dish,dish_dispenser)", "place_obj_on_counter()"}));
}

TEST(Parser, ProtocolTokensAreStripped) {
  EXPECT_EQ(canon("request('cut(chopping_board0)'); wait(1) [END]"),
            (std::vector<std::string>{"request(cut(chopping_board0))", "wait(1)"}));
  EXPECT_TRUE(canon("[NOTHING]").empty());
}

TEST(Parser, EmptyPlanIsValid) {
  auto r = parse_plan("   ");
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(r.actions.empty());
}

TEST(Parser, IdentifiersAreCanonicalised) {
  EXPECT_EQ(canon("Pickup(Bell Pepper, Ingredient_Dispenser)"),
            (std::vector<std::string>{"pickup(bell_pepper,ingredient_dispenser)"}));
  EXPECT_EQ(lang::canonical_identifier("ChoppingBoard0"), "chopping_board0");
}

TEST(Parser, ErrorsCarryOffsetAndToken) {
  auto r = parse_plan("wait(1); cut chopping_board0");
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(r.actions.empty());
  EXPECT_EQ(r.error->offset, 13u);
  EXPECT_NE(r.error->message.find("'('"), std::string::npos);

  auto unterminated = parse_plan("pickup(apple, ingredient_dispenser");
  ASSERT_FALSE(unterminated.ok());
  EXPECT_EQ(unterminated.error->message, "unterminated argument list");

  auto nested = parse_plan("request(request(cut(chopping_board0)))");
  ASSERT_FALSE(nested.ok());
  EXPECT_EQ(nested.error->offset, 8u);

  auto quote = parse_plan("request('cut(chopping_board0))");
  ASSERT_FALSE(quote.ok());
  EXPECT_EQ(quote.error->message, "unterminated quote in request(...)");

  auto empty_arg = parse_plan("pickup(, pot0)");
  ASSERT_FALSE(empty_arg.ok());
  EXPECT_EQ(empty_arg.error->offset, 7u);
}

TEST(Parser, ParseActionRequiresExactlyOne) {
  EXPECT_TRUE(lang::parse_action("deliver()"));
  EXPECT_FALSE(lang::parse_action("deliver(); deliver()"));
  EXPECT_FALSE(lang::parse_action(""));
  EXPECT_FALSE(lang::parse_action("deliver("));
}

TEST(Parser, CanonicalRoundTrip) {
  const char* plans[] = {"pickup(egg,ingredient_dispenser)", "request(cook(pot0))", "wait(3)",
                         "fill_dish_with_food(oven0)", "place_obj_on_counter()"};
  for (const char* p : plans) {
    auto a = lang::parse_action(p);
    ASSERT_TRUE(a) << p;
    EXPECT_EQ(lang::canonical(*a), p);
    EXPECT_EQ(lang::parse_action(lang::canonical(*a)), a);
  }
  EXPECT_EQ(lang::render_plan({Action{"wait", {"1"}, false}, Action{"deliver", {}, false}}),
            "[wait(1),deliver()]");
}
