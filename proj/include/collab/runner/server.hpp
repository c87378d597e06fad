#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "collab/runner/session.hpp"

namespace httplib {
class Server;
}

namespace collab::runner {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  std::optional<int> default_step_limit;  // applied when a create request omits step_limit
  std::chrono::milliseconds step_unit{1000};
  std::filesystem::path static_dir;  // optional client bundle served at /
  std::chrono::milliseconds long_poll_cap{30000};
};

// REST + Server-Sent Events front end for SessionManager under /api/v1.
class SessionServer {
 public:
  SessionServer(const tasks::Registry& registry, ServerOptions options);
  ~SessionServer();

  // Binds the socket and returns the bound port.
  int bind();
  // Serves on the calling thread until stop().
  void serve();
  // bind() + serve() on a background thread.
  int start();
  void stop();

  SessionManager& sessions() { return sessions_; }

 private:
  void routes();

  ServerOptions options_;
  SessionManager sessions_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace collab::runner
