#include <gtest/gtest.h>

#include <thread>

#include "collab/runner/server.hpp"
#include "httplib.h"
#include "support.hpp"

using namespace collab;
using namespace collab::runner;
using collab::testing::registry;
using collab::testing::task;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

class LiveServer {
 public:
  explicit LiveServer(std::chrono::milliseconds step_unit = 5ms) {
    ServerOptions o;
    o.port = 0;
    o.step_unit = step_unit;
    server_ = std::make_unique<SessionServer>(registry(), o);
    port_ = server_->start();
  }
  ~LiveServer() { server_->stop(); }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    return c;
  }
  SessionServer& server() { return *server_; }

 private:
  std::unique_ptr<SessionServer> server_;
  int port_ = 0;
};

json post(httplib::Client& c, const std::string& path, const json& body, int* status = nullptr) {
  auto res = c.Post(path, body.dump(), "application/json");
  if (!res) throw Error("no response");
  if (status) *status = res->status;
  return json::parse(res->body);
}

json get(httplib::Client& c, const std::string& path, int* status = nullptr) {
  auto res = c.Get(path);
  if (!res) throw Error("no response");
  if (status) *status = res->status;
  return json::parse(res->body);
}

std::string base(const std::string& id) { return "/api/v1/sessions/" + id; }

// Plays a human seat that executes exactly what the partner requests and
// otherwise waits. Returns once episode_end is seen.
json play_echo_human(httplib::Client& c, const std::string& id, const std::string& agent) {
  std::uint64_t next = 0;
  for (int guard = 0; guard < 2000; ++guard) {
    auto page = get(c, base(id) + "/messages?since=" + std::to_string(next) + "&wait_ms=2000");
    for (const auto& m : page["messages"]) {
      next = m["seq"].get<std::uint64_t>();
      if (m["kind"] == "episode_end") return m["payload"];
      if (m["kind"] != "prompt_view" || m["agent_id"] != agent) continue;
      std::string plan;
      for (const auto& a : m["payload"]["incoming_request"]) plan += (plan.empty() ? "" : "; ") + a.get<std::string>();
      const bool turn_plan = m["payload"]["turn"] == "plan";
      std::string say = !plan.empty() && turn_plan ? "On it. [END]" : "[NOTHING]";
      if (plan.empty()) plan = "wait(1)";
      int status = 0;
      post(c, base(id) + "/messages",
           {{"kind", "plan_submit"},
            {"agent_id", agent},
            {"payload",
             {{"prompt_id", m["payload"]["prompt_id"]}, {"analysis", "follow requests"}, {"say", say}, {"plan", plan}}}},
           &status);
      EXPECT_EQ(status, 202);
    }
  }
  throw Error("episode did not end");
}

void wait_finished(httplib::Client& c, const std::string& id) {
  for (int i = 0; i < 500; ++i) {
    if (get(c, base(id))["finished"].get<bool>()) return;
    std::this_thread::sleep_for(10ms);
  }
  throw Error("session did not finish");
}

}  // namespace

TEST(Session, HumanSeatPlaysToCompletionOverHttp) {
  LiveServer srv;
  auto c = srv.client();
  int status = 0;
  auto created = post(c, "/api/v1/sessions",
                      {{"task", "baked_potato_slices"}, {"roles", {{"alice", {{"kind", "human"}}}}}}, &status);
  ASSERT_EQ(status, 201);
  std::string id = created["session_id"];
  EXPECT_EQ(id, "s1");
  auto end = play_echo_human(c, id, "alice");
  EXPECT_TRUE(end["success"].get<bool>()) << end.dump();
  EXPECT_EQ(end["end_reason"], "delivered");

  auto report = get(c, base(id) + "/report", &status);
  EXPECT_EQ(status, 200);
  EXPECT_EQ(report["task"], "baked_potato_slices");
  EXPECT_EQ(report["backends"]["alice"], "human");
  EXPECT_DOUBLE_EQ(report["metrics"]["pc"].get<double>(), 1.0);

  auto page = get(c, base(id) + "/messages?since=0");
  std::set<std::string> kinds;
  for (const auto& m : page["messages"]) {
    kinds.insert(m["kind"].get<std::string>());
    EXPECT_EQ(m["v"], kProtocolVersion);
    EXPECT_EQ(m["session_id"], id);
  }
  for (const char* k : {"state_broadcast", "prompt_view", "plan_submit", "timer", "say", "episode_end"})
    EXPECT_TRUE(kinds.count(k)) << k;
}

TEST(Session, ConcurrentSessionsAreIsolated) {
  LiveServer srv;
  auto c = srv.client();
  std::string a = post(c, "/api/v1/sessions", {{"task", "boiled_egg"}})["session_id"];
  std::string b = post(c, "/api/v1/sessions",
                       {{"task", "baked_pumpkin_soup"}, {"roles", {{"bob", {{"kind", "wait_only"}}}}}})["session_id"];
  EXPECT_NE(a, b);
  wait_finished(c, a);
  wait_finished(c, b);
  auto ra = get(c, base(a) + "/report");
  auto rb = get(c, base(b) + "/report");
  EXPECT_EQ(ra["task"], "boiled_egg");
  EXPECT_TRUE(ra["success"].get<bool>());
  EXPECT_EQ(rb["task"], "baked_pumpkin_soup");
  EXPECT_EQ(rb["end_reason"], "time_limit");
  auto log_b = get(c, base(b) + "/messages");
  for (const auto& m : log_b["messages"]) EXPECT_EQ(m["session_id"], b);
  EXPECT_EQ(get(c, "/api/v1/sessions")["sessions"].size(), 2u);
}

TEST(Session, MissedDeadlineAppliesWaitAndRecordsViolation) {
  LiveServer srv(2ms);
  auto c = srv.client();
  std::string id = post(c, "/api/v1/sessions",
                        {{"task", "boiled_egg"}, {"step_limit", 10}, {"roles", {{"alice", {{"kind", "human"}}}}}})["session_id"];
  wait_finished(c, id);
  auto report = get(c, base(id) + "/report");
  EXPECT_EQ(report["end_reason"], "time_limit");
  bool deadline_entry = false;
  for (const auto& r : report["rejected"])
    if (r["stage"] == "deadline" && r["code"] == "DeadlineViolation") deadline_entry = true;
  EXPECT_TRUE(deadline_entry);

  std::uint64_t expired_prompt = 0;
  auto log = get(c, base(id) + "/messages");
  for (const auto& m : log["messages"])
    if (m["kind"] == "timer" && m["payload"]["expired"].get<bool>()) {
      EXPECT_EQ(m["payload"]["applied"], "wait(1)");
      expired_prompt = m["payload"]["prompt_id"];
    }
  ASSERT_NE(expired_prompt, 0u);
  EXPECT_GT(srv.server().sessions().get(id)->violations().size(), 0u);

  int status = 0;
  auto err = post(c, base(id) + "/messages",
                  {{"kind", "plan_submit"}, {"agent_id", "alice"}, {"payload", {{"prompt_id", expired_prompt}, {"plan", "wait(1)"}}}},
                  &status);
  EXPECT_EQ(status, 409);
  EXPECT_EQ(err["error"], "DeadlineViolation");
}

TEST(Session, ProtocolErrors) {
  LiveServer srv(1000ms);
  auto c = srv.client();
  int status = 0;
  get(c, base("s99"), &status);
  EXPECT_EQ(status, 404);
  post(c, base("s99") + "/messages", {{"kind", "say"}}, &status);
  EXPECT_EQ(status, 404);
  post(c, "/api/v1/sessions", {{"task", "no_such_task"}}, &status);
  EXPECT_EQ(status, 404);
  post(c, "/api/v1/sessions", {{"task", "boiled_egg"}, {"step_limit", 12}}, &status);
  EXPECT_EQ(status, 400);

  std::string id = post(c, "/api/v1/sessions",
                        {{"task", "boiled_egg"}, {"roles", {{"alice", {{"kind", "human"}}}}}})["session_id"];
  auto missing_plan = post(c, base(id) + "/messages",
                           {{"kind", "plan_submit"}, {"agent_id", "alice"}, {"payload", {{"prompt_id", 1}}}}, &status);
  EXPECT_EQ(status, 400);
  EXPECT_EQ(missing_plan["error"], "MalformedPlanSubmit");
  post(c, base(id) + "/messages", {{"kind", "plan_submit"}, {"agent_id", "bob"}, {"payload", {{"prompt_id", 1}, {"plan", "wait(1)"}}}},
       &status);
  EXPECT_EQ(status, 400);  // Bob is not a human seat
  post(c, base(id) + "/messages", {{"kind", "teleport"}, {"agent_id", "alice"}, {"payload", {{"prompt_id", 1}}}}, &status);
  EXPECT_EQ(status, 400);
  auto res = c.Post(base(id) + "/messages", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  post(c, base(id) + "/messages", {{"kind", "plan_submit"}, {"agent_id", "alice"}, {"payload", {{"prompt_id", 999}, {"plan", "wait(1)"}}}},
       &status);
  EXPECT_EQ(status, 409);
  get(c, base(id) + "/report", &status);
  EXPECT_EQ(status, 409);

  auto del = c.Delete(base(id));
  ASSERT_TRUE(del);
  EXPECT_EQ(del->status, 200);
  get(c, base(id), &status);
  EXPECT_EQ(status, 404);
}

TEST(Session, EventStreamReplaysFromLastEventId) {
  LiveServer srv;
  auto c = srv.client();
  std::string id = post(c, "/api/v1/sessions", {{"task", "boiled_egg"}})["session_id"];
  wait_finished(c, id);
  auto res = c.Get(base(id) + "/stream");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "text/event-stream");
  EXPECT_EQ(res->body.rfind("id: 1\nevent: state_broadcast\ndata: {", 0), 0u);
  EXPECT_NE(res->body.find("event: episode_end"), std::string::npos);

  auto total = get(c, base(id) + "/messages")["messages"].size();
  httplib::Headers h{{"Last-Event-ID", std::to_string(total - 1)}};
  auto tail = c.Get(base(id) + "/stream", h);
  ASSERT_TRUE(tail);
  EXPECT_EQ(tail->body.rfind("id: " + std::to_string(total) + "\nevent: episode_end\n", 0), 0u) << tail->body;
}

TEST(Session, CatalogEndpoint) {
  LiveServer srv;
  auto c = srv.client();
  auto all = get(c, "/api/v1/tasks");
  EXPECT_EQ(all["tasks"].size(), registry().tasks().size());
  auto l4 = get(c, "/api/v1/tasks?level=4");
  EXPECT_EQ(l4["tasks"].size(), 2u);
}

TEST(SessionSpec, Parsing) {
  auto s = session_spec_from_json({{"task", "boiled_egg"}, {"step_limit", 15}, {"roles", {{"bob", {{"kind", "random"}}}}}});
  EXPECT_EQ(s.step_limit, 15);
  EXPECT_FALSE(s.roles[0].human);
  EXPECT_EQ(s.roles[0].backend.kind, "random");
  EXPECT_EQ(s.roles[1].backend.kind, "scripted_rat");
  EXPECT_THROW(session_spec_from_json({{"step_limit", 10}}), Error);
  EXPECT_THROW(session_spec_from_json({{"task", "boiled_egg"}, {"gamma", 0}}), Error);
}
