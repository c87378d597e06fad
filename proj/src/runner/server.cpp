#include "collab/runner/server.hpp"

#include "httplib.h"

namespace collab::runner {
using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  reply(res, status, json{{"v", kProtocolVersion}, {"error", code}, {"message", message}});
}

// Runs `fn` and maps domain errors onto HTTP status codes.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const SessionNotFound& e) {
    fail(res, 404, "SessionNotFound", e.what());
  } catch (const MalformedPlanSubmit& e) {
    fail(res, 400, "MalformedPlanSubmit", e.what());
  } catch (const LateSubmit& e) {
    fail(res, 409, "DeadlineViolation", e.what());
  } catch (const json::exception& e) {
    fail(res, 400, "BadJson", e.what());
  } catch (const std::exception& e) {
    fail(res, 400, "BadRequest", e.what());
  }
}

std::uint64_t query_u64(const httplib::Request& req, const char* key, std::uint64_t fallback) {
  if (!req.has_param(key)) return fallback;
  return std::stoull(req.get_param_value(key));
}

std::string sse_frame(const SessionMessage& m) {
  return "id: " + std::to_string(m.seq) + "\nevent: " + m.kind + "\ndata: " + to_json(m).dump() + "\n\n";
}

}  // namespace

SessionServer::SessionServer(const tasks::Registry& registry, ServerOptions options)
    : options_(std::move(options)),
      sessions_(registry, options_.step_unit),
      http_(std::make_unique<httplib::Server>()) {
  routes();
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::routes() {
  auto& srv = *http_;
  const std::string sid = R"(/api/v1/sessions/([A-Za-z0-9_-]+))";

  srv.Get("/api/v1/tasks", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::optional<int> level;
      if (req.has_param("level")) level = std::stoi(req.get_param_value("level"));
      json list = json::array();
      for (const auto& s : sessions_.registry().catalog(level)) list.push_back(tasks::to_json(s));
      reply(res, 200, json{{"v", kProtocolVersion}, {"tasks", list}});
    });
  });

  srv.Post("/api/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body = json::parse(req.body);
      if (body.is_object() && !body.contains("step_limit") && options_.default_step_limit)
        body["step_limit"] = *options_.default_step_limit;
      SessionSpec spec = session_spec_from_json(body);
      if (!sessions_.registry().find(spec.task)) {
        fail(res, 404, "TaskNotFound", "no task '" + spec.task + "'");
        return;
      }
      auto s = sessions_.create(std::move(spec));
      reply(res, 201, s->summary());
    });
  });

  srv.Get("/api/v1/sessions", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json list = json::array();
      for (const auto& s : sessions_.list()) list.push_back(s->summary());
      reply(res, 200, json{{"v", kProtocolVersion}, {"sessions", list}});
    });
  });

  srv.Get(sid, [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, sessions_.get(req.matches[1])->summary()); });
  });

  srv.Delete(sid, [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      sessions_.close(req.matches[1]);
      reply(res, 200, json{{"v", kProtocolVersion}, {"closed", std::string(req.matches[1])}});
    });
  });

  srv.Get(sid + "/messages", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = sessions_.get(req.matches[1]);
      auto since = query_u64(req, "since", 0);
      auto wait = std::chrono::milliseconds(
          std::min<std::uint64_t>(query_u64(req, "wait_ms", 0), options_.long_poll_cap.count()));
      json list = json::array();
      std::uint64_t next = since;
      for (const auto& m : s->messages_since(since, wait)) {
        list.push_back(to_json(m));
        next = m.seq;
      }
      reply(res, 200, json{{"v", kProtocolVersion}, {"messages", list}, {"next", next}, {"finished", s->finished()}});
    });
  });

  srv.Get(sid + "/stream", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = sessions_.get(req.matches[1]);
      auto since = std::make_shared<std::uint64_t>(query_u64(req, "since", 0));
      if (req.has_header("Last-Event-ID")) *since = std::stoull(req.get_header_value("Last-Event-ID"));
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider("text/event-stream", [s, since](std::size_t, httplib::DataSink& sink) {
        if (!sink.is_writable()) return false;
        auto batch = s->messages_since(*since, std::chrono::milliseconds(250));
        for (const auto& m : batch) {
          std::string frame = sse_frame(m);
          if (!sink.write(frame.data(), frame.size())) return false;
          *since = m.seq;
        }
        if (batch.empty() && s->finished()) sink.done();
        return true;
      });
    });
  });

  srv.Post(sid + "/messages", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = sessions_.get(req.matches[1]);
      json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) throw MalformedPlanSubmit("body must be a JSON object");
      if (!body.contains("kind") || !body["kind"].is_string()) throw MalformedPlanSubmit("missing 'kind'");
      if (!body.contains("agent_id") || !body["agent_id"].is_string())
        throw MalformedPlanSubmit("missing 'agent_id'");
      auto agent = agent_from_string(body["agent_id"].get<std::string>());
      if (!agent) throw MalformedPlanSubmit("agent_id must be 'bob' or 'alice'");
      s->submit(*agent, body["kind"].get<std::string>(), body.value("payload", json()));
      reply(res, 202, json{{"v", kProtocolVersion}, {"accepted", true}});
    });
  });

  srv.Get(sid + "/report", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto s = sessions_.get(req.matches[1]);
      auto r = s->report();
      if (!r) {
        fail(res, 409, "EpisodeRunning", "the episode has not finished");
        return;
      }
      reply(res, 200, harness::to_json(*r));
    });
  });

  if (!options_.static_dir.empty()) srv.set_mount_point("/", options_.static_dir.string());
}

int SessionServer::bind() {
  if (port_ >= 0) return port_;
  if (options_.port == 0)
    port_ = http_->bind_to_any_port(options_.host);
  else
    port_ = http_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
  if (port_ < 0) throw Error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  return port_;
}

void SessionServer::serve() {
  bind();
  http_->listen_after_bind();
}

int SessionServer::start() {
  int port = bind();
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return port;
}

void SessionServer::stop() {
  sessions_.close_all();
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace collab::runner
