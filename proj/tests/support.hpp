#pragma once

#include <filesystem>

#include "collab/tasks/task.hpp"

namespace collab::testing {

inline std::filesystem::path data_dir() { return COLLAB_DATA_DIR; }
inline std::filesystem::path tasks_dir() { return data_dir() / "tasks"; }
inline std::filesystem::path mocks_dir() { return data_dir() / "mocks"; }

// Loaded once per test binary.
inline const tasks::Registry& registry() {
  static const tasks::Registry r = tasks::Registry::load_dir(tasks_dir());
  return r;
}

inline const tasks::TaskSpec& task(std::string_view name) { return registry().get(name); }

inline Action act(std::string text) {
  auto a = lang::parse_action(text);
  if (!a) throw Error("test action does not parse: " + text);
  return *a;
}

}  // namespace collab::testing
