#include <gtest/gtest.h>

#include "collab/harness/episode.hpp"
#include "support.hpp"

using namespace collab;
using namespace collab::harness;
using collab::testing::mocks_dir;
using collab::testing::registry;
using collab::testing::task;
using nlohmann::json;

namespace {

EpisodeReport run_pair(const tasks::TaskSpec& t, Backend& bob, Backend& alice, EpisodeConfig cfg = {}) {
  return run_episode(t, {&bob, &alice}, cfg);
}

struct MockRun {
  std::unique_ptr<RecordedMockBackend> bob, alice;
  EpisodeReport report;
};

MockRun run_mock(const std::string& task_name, const std::string& file, EpisodeConfig cfg = {}) {
  BackendConfig bc;
  bc.kind = "recorded_mock";
  bc.mock_path = mocks_dir() / file;
  MockRun r;
  auto b = make_backend(bc, Agent::bob, 0);
  auto a = make_backend(bc, Agent::alice, 0);
  r.bob.reset(static_cast<RecordedMockBackend*>(b.release()));
  r.alice.reset(static_cast<RecordedMockBackend*>(a.release()));
  r.report = run_episode(task(task_name), {r.bob.get(), r.alice.get()}, cfg);
  return r;
}

const CollaborationEvent& first(const EpisodeReport& r, EventKind k) {
  for (const auto& e : r.events)
    if (e.kind == k) return e;
  throw Error("no event of that kind");
}

BackendReply text(std::string plan, std::string say = "[NOTHING]") {
  return {format_planner_output({"", std::move(say), std::move(plan)}), {}};
}

}  // namespace

TEST(Episode, ScriptedOraclesSolveEveryTaskOptimally) {
  for (const auto& t : registry().tasks()) {
    for (std::size_t j = 0; j < t.rats.size(); ++j) {
      ScriptedRatBackend bob(j), alice(j);
      auto r = run_pair(t, bob, alice);
      EXPECT_TRUE(r.success) << t.name;
      EXPECT_EQ(r.end_reason, "delivered");
      EXPECT_EQ(r.timesteps, t.min_timesteps) << t.name << " RAT " << j;
      EXPECT_EQ(r.metrics.sr, 1.0);
      EXPECT_EQ(r.metrics.pc, 1.0) << t.name;
      EXPECT_EQ(r.metrics.ic, 1.0) << t.name;
      EXPECT_EQ(r.metrics.rc, 1.0) << t.name;
      EXPECT_EQ(r.metrics.required_collaborations, t.rats[0].slots.size());
      EXPECT_TRUE(r.rejected.empty()) << t.name;
    }
  }
}

TEST(Episode, WaitOnlyBackendsTimeOut) {
  WaitOnlyBackend bob, alice;
  const auto& t = task("baked_pumpkin_soup");
  auto r = run_pair(t, bob, alice);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.end_reason, "time_limit");
  EXPECT_EQ(r.timesteps, t.time_limit(1.5));
  EXPECT_EQ(r.metrics.pc, 0.0);
  EXPECT_EQ(r.metrics.ic, 0.0);
  EXPECT_TRUE(r.trajectories[0].empty());
}

TEST(Episode, ShortTimeLimitEndsAtTheLimit) {
  ScriptedRatBackend bob, alice;
  EpisodeConfig cfg;
  cfg.gamma = 0.5;
  const auto& t = task("baked_pumpkin_soup");
  auto r = run_pair(t, bob, alice, cfg);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.end_reason, "time_limit");
  EXPECT_EQ(r.timesteps, 9);
  EXPECT_GT(r.metrics.pc, 0.0);
  EXPECT_LT(r.metrics.pc, 1.0);
}

TEST(Communication, SilentOpenerOpensNothing) {
  int calls = 0;
  auto st = run_communication(Agent::bob, "[NOTHING]", 4, [&](Agent, const ConversationState&) {
    ++calls;
    return std::string("hi");
  });
  EXPECT_TRUE(st.transcript.empty());
  EXPECT_EQ(calls, 0);
  EXPECT_TRUE(st.terminated);
}

TEST(Communication, ChattyAgentsStopAtMaxRounds) {
  std::vector<Agent> speakers;
  auto st = run_communication(Agent::bob, "hello", 4, [&](Agent a, const ConversationState&) {
    speakers.push_back(a);
    return std::string("more");
  });
  EXPECT_EQ(st.rounds_used, 4);
  EXPECT_EQ(st.transcript.size(), 4u);
  EXPECT_EQ(speakers, (std::vector<Agent>{Agent::alice, Agent::bob, Agent::alice}));
}

TEST(Communication, EndAllowsExactlyOneReply) {
  int calls = 0;
  auto st = run_communication(Agent::bob, "do this [END]", 4, [&](Agent, const ConversationState&) {
    ++calls;
    return std::string("ok");
  });
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(st.transcript.size(), 2u);

  calls = 0;
  st = run_communication(Agent::alice, "question", 4, [&](Agent, const ConversationState& s) {
    ++calls;
    return s.transcript.size() == 1 ? std::string("answer [END]") : std::string("thanks");
  });
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(st.transcript.back().text, "thanks");
  EXPECT_EQ(st.transcript.back().speaker, Agent::alice);
}

TEST(Communication, SilentReplyClosesChannel) {
  auto st = run_communication(Agent::bob, "hi", 4, [](Agent, const ConversationState&) {
    return std::string(" [NOTHING] ");
  });
  EXPECT_EQ(st.transcript.size(), 1u);
  EXPECT_EQ(st.rounds_used, 1);
}

TEST(Retry, InvalidPlanIsRepromptedUpToTheCap) {
  std::vector<std::string> prompts;
  CallbackBackend bob(
      [&](const PlanRequest& req) {
        if (req.timestep == 0) prompts.push_back(req.prompt);
        return text("wait(1); fly(pot0)");
      },
      "bad");
  WaitOnlyBackend alice;
  EpisodeConfig cfg;
  cfg.max_retries = 3;
  auto r = run_pair(task("boiled_egg"), bob, alice, cfg);
  ASSERT_EQ(prompts.size(), 4u);
  EXPECT_EQ(prompts[0].find("Error:"), std::string::npos);
  for (std::size_t i = 1; i < prompts.size(); ++i)
    EXPECT_NE(prompts[i].find("Error: fly is not a valid action."), std::string::npos);
  int at_zero = 0;
  for (const auto& x : r.rejected)
    if (x.t == 0 && x.agent == Agent::bob) {
      ++at_zero;
      EXPECT_EQ(x.code, "UnknownFunction");
    }
  EXPECT_EQ(at_zero, 4);
}

TEST(Retry, RetryCapIsConfigurable) {
  int calls = 0;
  CallbackBackend bob(
      [&](const PlanRequest& req) {
        if (req.timestep == 0) ++calls;
        return text("cut(chopping_board0)");
      },
      "bad");
  WaitOnlyBackend alice;
  EpisodeConfig cfg;
  cfg.max_retries = 0;
  run_pair(task("boiled_egg"), bob, alice, cfg);
  EXPECT_EQ(calls, 1);
}

TEST(Retry, ValidPrefixIsCommittedAfterRetriesRunOut) {
  CallbackBackend alice(
      [&](const PlanRequest& req) {
        return req.timestep == 0 ? text("pickup(egg, ingredient_dispenser); deliver()") : text("wait(1)");
      },
      "prefix");
  WaitOnlyBackend bob;
  auto r = run_pair(task("boiled_egg"), bob, alice);
  ASSERT_FALSE(r.trajectories[1].empty());
  EXPECT_EQ(lang::canonical(r.trajectories[1][0].action), "pickup(egg,ingredient_dispenser)");
  EXPECT_EQ(r.trajectories[1][0].t, 0);
}

TEST(Retry, CorrectedPlanAfterErrorFeedback) {
  CallbackBackend alice(
      [&](const PlanRequest& req) {
        if (req.timestep == 0 && req.attempt == 0) return text("pickup(egg, dispenser)");
        if (req.timestep == 0) return text("pickup(egg, ingredient_dispenser)");
        return text("wait(1)");
      },
      "fixes");
  WaitOnlyBackend bob;
  auto r = run_pair(task("boiled_egg"), bob, alice);
  ASSERT_EQ(r.trajectories[1].size(), 1u);
  EXPECT_EQ(r.trajectories[1][0].t, 0);
}

TEST(Retry, PlanStepFormatRetries) {
  const auto& t = task("boiled_egg");
  auto w = t.initial_world(1.5);
  PromptInputs in;
  in.world = &w;
  in.task = &t;
  int calls = 0;
  std::vector<std::string> prompts;
  CallbackBackend flaky(
      [&](const PlanRequest& req) {
        prompts.push_back(req.prompt);
        return ++calls < 3 ? BackendReply{"no fields here", {1, 2}} : text("wait(1)");
      },
      "flaky");
  TokenUsage usage;
  auto out = plan_step(flaky, in, TurnKind::plan, 3, &usage);
  EXPECT_EQ(out.plan, "wait(1)");
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(usage.calls, 3);
  EXPECT_EQ(usage.prompt_tokens, 2);
  EXPECT_NE(prompts[1].find("could not be read"), std::string::npos);

  CallbackBackend broken([](const PlanRequest&) { return BackendReply{"???", {}}; }, "broken");
  EXPECT_THROW(plan_step(broken, in, TurnKind::plan, 2), FormatError);
}

TEST(Retry, UnreadableOutputIdlesTheAgent) {
  CallbackBackend bob([](const PlanRequest&) { return BackendReply{"garbage", {}}; }, "garbage");
  ScriptedRatBackend alice;
  auto r = run_pair(task("boiled_egg"), bob, alice);
  EXPECT_EQ(r.end_reason, "time_limit");
  EXPECT_FALSE(r.rejected.empty());
  EXPECT_EQ(r.rejected.front().stage, "format");
}

TEST(Episode, BackendFailureAbortsCleanly) {
  CallbackBackend bob(
      [](const PlanRequest& req) -> BackendReply {
        if (req.timestep == 2) throw BackendTimeout("endpoint unreachable");
        return text("wait(1)");
      },
      "flaky");
  WaitOnlyBackend alice;
  auto r = run_pair(task("boiled_egg"), bob, alice);
  EXPECT_EQ(r.end_reason, "aborted");
  EXPECT_EQ(r.failure_cause, "endpoint unreachable");
  EXPECT_EQ(r.timesteps, 2);
  EXPECT_FALSE(r.success);
}

TEST(Episode, TokenBudgetAborts) {
  CallbackBackend bob([](const PlanRequest&) { return BackendReply{format_planner_output({"", "[NOTHING]", "wait(1)"}), {40, 10}}; },
                      "costly");
  WaitOnlyBackend alice;
  EpisodeConfig cfg;
  cfg.token_budget = 120;
  auto r = run_pair(task("boiled_egg"), bob, alice, cfg);
  EXPECT_EQ(r.end_reason, "aborted");
  EXPECT_NE(r.failure_cause.find("token budget"), std::string::npos);
  EXPECT_EQ(r.tokens[0].calls, 3);
}

TEST(Episode, MemoryWindowKeepsTheLatestActions) {
  std::vector<std::string> prompts;
  CallbackBackend alice(
      [&](const PlanRequest& req) {
        prompts.push_back(req.prompt);
        return text(req.timestep % 2 == 0 ? "pickup(egg, ingredient_dispenser)" : "place_obj_on_counter()");
      },
      "shuffler");
  WaitOnlyBackend bob;
  EpisodeConfig cfg;
  cfg.memory_window = 2;
  auto r = run_pair(task("boiled_egg"), bob, alice, cfg);
  ASSERT_GT(r.trajectories[1].size(), 3u);
  const std::string key = "Successful Action History: [";
  std::size_t longest = 0;
  for (const auto& p : prompts) {
    auto at = p.find(key);
    ASSERT_NE(at, std::string::npos);
    auto list = p.substr(at + key.size(), p.find(']', at) - at - key.size());
    longest = std::max<std::size_t>(longest, list.empty() ? 0 : std::count(list.begin(), list.end(), ')'));
  }
  EXPECT_EQ(longest, 2u);
  EXPECT_NE(prompts.back().find(key + "place_obj_on_counter(),pickup(egg,ingredient_dispenser)]"), std::string::npos);
}

TEST(Episode, RequestsReachThePartnerAndAreAnswered) {
  auto r = run_mock("baked_bell_pepper", "case1_baked_bell_pepper.json").report;
  ASSERT_EQ(r.conversations.size(), 1u);
  EXPECT_EQ(r.conversations[0].turns.size(), 1u);  // Alice's reply was silent
  const auto& req = first(r, EventKind::request);
  EXPECT_EQ(req.initiator, Agent::bob);
  EXPECT_EQ(req.scored_against, Agent::alice);
  ASSERT_EQ(r.trajectories[1].size(), 2u);
  EXPECT_TRUE(r.trajectories[1][0].via_request);
  EXPECT_EQ(r.trajectories[1][1].t, 1);
}

TEST(Cases, RecordedTranscriptsClassifyCollaboration) {
  struct Row {
    const char* task;
    const char* file;
    bool initiation;
    bool response;
  };
  const Row rows[] = {{"baked_bell_pepper", "case1_baked_bell_pepper.json", true, true},
                      {"sliced_pumpkin_and_chickpea_stew", "case2_sliced_pumpkin_and_chickpea_stew.json", false, true},
                      {"mashed_cauliflower_and_lentil_patty", "case3_mashed_cauliflower_and_lentil_patty.json", true, false},
                      {"sliced_eggplant_and_chickpea_stew", "case4_sliced_eggplant_and_chickpea_stew.json", false, false}};
  for (const auto& row : rows) {
    auto r = run_mock(row.task, row.file).report;
    EXPECT_EQ(first(r, EventKind::request).ites > 0, row.initiation) << row.task;
    EXPECT_EQ(first(r, EventKind::response).ites > 0, row.response) << row.task;
  }
}

TEST(Cases, ValidatorErrorRoundTripsIntoRetryPrompt) {
  auto run = run_mock("mashed_cauliflower_and_lentil_patty", "case3_mashed_cauliflower_and_lentil_patty.json");
  const auto& r = run.report;
  auto it = std::find_if(r.rejected.begin(), r.rejected.end(), [](const RejectedAction& x) { return x.stage == "validator"; });
  ASSERT_NE(it, r.rejected.end());
  EXPECT_EQ(it->code, "UnknownArgument");
  EXPECT_EQ(it->text, "pickup(cauliflower,dispenser)");
  auto prompts = run.alice->prompts();
  ASSERT_GE(prompts.size(), 2u);
  EXPECT_NE(prompts[1].find("Error: " + it->message), std::string::npos);
  EXPECT_EQ(prompts[0].find(it->message), std::string::npos);
}

TEST(Determinism, IdenticalSeedsGiveIdenticalReports) {
  auto a = run_mock("mashed_cauliflower_and_lentil_patty", "case3_mashed_cauliflower_and_lentil_patty.json");
  auto b = run_mock("mashed_cauliflower_and_lentil_patty", "case3_mashed_cauliflower_and_lentil_patty.json");
  EXPECT_EQ(to_json(a.report).dump(), to_json(b.report).dump());

  for (std::uint64_t seed : {1u, 2u}) {
    RandomBackend b1(seed), a1(seed + 100), b2(seed), a2(seed + 100);
    auto r1 = run_pair(task("baked_potato_slices"), b1, a1);
    auto r2 = run_pair(task("baked_potato_slices"), b2, a2);
    EXPECT_EQ(to_json(r1).dump(), to_json(r2).dump());
  }
}

TEST(Report, JsonRoundTripAndVersionCheck) {
  auto r = run_mock("sliced_eggplant_and_chickpea_stew", "case4_sliced_eggplant_and_chickpea_stew.json").report;
  json j = to_json(r);
  EXPECT_EQ(to_json(report_from_json(j)).dump(), j.dump());
  j["schema_version"] = 99;
  EXPECT_THROW(report_from_json(j), SchemaVersionMismatch);
}

TEST(Report, HistoriesExcludeWaits) {
  auto r = run_mock("sliced_pumpkin_and_chickpea_stew", "case2_sliced_pumpkin_and_chickpea_stew.json").report;
  for (Agent a : kAgents)
    for (const auto& s : r.history(a)) EXPECT_NE(s.rfind("wait(", 0), 0u);
  EXPECT_EQ(r.history(Agent::alice).size(), 3u);
}
