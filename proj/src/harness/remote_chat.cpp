#include <cstdlib>

#include "collab/harness/backend.hpp"
#include "httplib.h"

namespace collab::harness {
using nlohmann::json;

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

Endpoint split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("endpoint_url must include a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
  return e;
}

}  // namespace

RemoteChatBackend::RemoteChatBackend(BackendConfig config) : config_(std::move(config)) {
  config_.check();
  split_url(config_.endpoint_url);
}

BackendReply RemoteChatBackend::complete(const PlanRequest& req) {
  if (!req.bundle) throw Error("remote_chat: request without prompt bundle");
  Endpoint ep = split_url(config_.endpoint_url);
  httplib::Client cli(ep.origin);
  auto secs = static_cast<time_t>(config_.request_timeout_s);
  auto usecs = static_cast<time_t>((config_.request_timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  json body = {{"model", config_.model},
               {"temperature", config_.temperature},
               {"top_p", config_.top_p},
               {"messages",
                {{{"role", "system"}, {"content", req.bundle->system_text()}},
                 {{"role", "user"}, {"content", req.bundle->user_text()}}}}};
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    auto res = cli.Post(ep.path + "/chat/completions", headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw Error("remote_chat: HTTP " + std::to_string(res->status) + ": " + res->body);
    json doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty())
      throw Error("remote_chat: malformed completion response");
    BackendReply reply;
    reply.text = doc["choices"][0]["message"].value("content", std::string());
    if (doc.contains("usage")) {
      reply.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
      reply.usage.completion_tokens = doc["usage"].value("completion_tokens", 0L);
    }
    return reply;
  }
  throw BackendTimeout("remote_chat: no response from " + config_.endpoint_url + " after " +
                       std::to_string(config_.max_retries + 1) + " attempt(s): " + last_error);
}

}  // namespace collab::harness
