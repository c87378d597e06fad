#include <gtest/gtest.h>

#include "collab/metrics/metrics.hpp"
#include "metric_oracles.hpp"

using namespace collab;
using namespace collab::metrics;

namespace {

// Worked example: an unrelated egg is fetched at step four, so the final
// placement matches the RAT by LCS but not by prefix.
const Trajectory kRat = {"pickup(tofu,ingredient_dispenser)", "put_obj_in_utensil(chopping_board_0)",
                         "cut(chopping_board_0)", "pickup(chopped_tofu,chopping_board_0)",
                         "place_obj_on_counter()"};
const Trajectory kHistory = {"pickup(tofu,ingredient_dispenser)", "put_obj_in_utensil(chopping_board_0)",
                             "cut(chopping_board_0)", "pickup(egg,ingredient_dispenser)",
                             "place_obj_on_counter()"};

}  // namespace

TEST(Metrics, WorkedExampleTesVersusRouge) {
  EXPECT_EQ(d_max(kHistory, kRat), 3u);
  EXPECT_EQ(lcs_length(kHistory, kRat), 4u);
  EXPECT_NEAR(tes(kHistory, {kRat}), 0.6, 1e-9);
  EXPECT_NEAR(rouge_l(kHistory, kRat), 0.8, 1e-9);
}

TEST(Metrics, TesFormula) {
  // m = 4, n = 3, d = 2.
  Trajectory rat = {"a()", "b()", "c()", "d()"};
  Trajectory h = {"a()", "x()", "b()"};
  const double b2 = 0.95 * 0.95;
  EXPECT_NEAR(tes(h, {rat}), (1 + b2) * 2 / (4 + b2 * 3), 1e-15);
  EXPECT_EQ(tes(rat, {rat}), 1.0);
  EXPECT_EQ(tes({}, {rat}), 0.0);
}

TEST(Metrics, BestRatWinsAndTiesPickLowestIndex) {
  RatSet rats = {{"a()", "b()"}, {"b()", "a()"}, {"a()", "b()"}};
  auto r = tes_detail({"b()", "a()"}, rats);
  EXPECT_EQ(r.rat_index, 1u);
  EXPECT_EQ(r.value, 1.0);
  auto tie = tes_detail({"a()"}, rats);
  EXPECT_EQ(tie.rat_index, 0u);
}

TEST(Metrics, EmptyInputs) {
  EXPECT_THROW(tes({"a()"}, {}), EmptyRatSet);
  EXPECT_EQ(tes({}, {{}}), 1.0);
  EXPECT_EQ(tes({"a()"}, {{}}), 0.0);
  EXPECT_EQ(ites({}, {"a()"}, {{"a()", "b()"}}), 0.0);
}

TEST(Metrics, ItesIsTesDifference) {
  RatSet rats = {{"a()", "b()", "c()"}};
  EXPECT_NEAR(ites({"b()"}, {"a()"}, rats), tes({"a()", "b()"}, rats) - tes({"a()"}, rats), 1e-15);
  EXPECT_GT(ites({"b()"}, {"a()"}, rats), 0.0);
  EXPECT_LT(ites({"a()"}, {"a()"}, rats), 0.0);
  EXPECT_EQ(ites({"c()"}, {}, rats), 0.0);
}

TEST(Metrics, ProgressCompletenessIsMeanTes) {
  std::vector<Trajectory> hs = {{"a()"}, {"x()", "y()"}};
  std::vector<RatSet> rs = {{{"a()"}}, {{"x()", "z()"}}};
  EXPECT_NEAR(pc(hs, rs), (tes(hs[0], rs[0]) + tes(hs[1], rs[1])) / 2, 1e-15);
  EXPECT_EQ(pc({{}, {}}, {{{"a()"}}, {{"b()"}}}), 0.0);
}

TEST(Metrics, CollaborationRateUsesFirstNEvents) {
  EXPECT_EQ(ic({0.1, -0.2, 0.3, 0.5}, 3), 2.0 / 3.0);
  EXPECT_EQ(rc({0.1}, 3), 1.0 / 3.0);
  EXPECT_EQ(rc({0.0, 0.0}, 2), 0.0);
  EXPECT_FALSE(ic({0.1}, 0));
}

TEST(Metrics, RougeMatchesBruteForceLcs) {
  std::mt19937_64 rng(3);
  std::vector<std::string> alpha = {"a()", "b()", "c()"};
  for (int i = 0; i < 2000; ++i) {
    Trajectory x, y;
    for (std::size_t k = std::uniform_int_distribution<std::size_t>(0, 7)(rng); k > 0; --k) x.push_back(alpha[rng() % 3]);
    for (std::size_t k = std::uniform_int_distribution<std::size_t>(0, 7)(rng); k > 0; --k) y.push_back(alpha[rng() % 3]);
    ASSERT_EQ(lcs_length(x, y), collab::testing::brute_lcs(x, y));
  }
}

TEST(Metrics, RandomizedProperties) {
  auto rep = collab::testing::run_metric_properties(10000, 20240601);
  EXPECT_EQ(rep.cases, 10000);
  EXPECT_EQ(rep.range_failures, 0);
  EXPECT_EQ(rep.exact_match_failures, 0);
  EXPECT_EQ(rep.append_failures, 0);
  EXPECT_EQ(rep.d_max_failures, 0);
  EXPECT_EQ(rep.tes_oracle_failures, 0);
  EXPECT_EQ(rep.ites_sign_failures, 0);
}
