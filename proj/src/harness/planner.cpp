#include "collab/harness/planner.hpp"

#include <array>
#include <cctype>

namespace collab::harness {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

constexpr std::array<std::string_view, 3> kFields = {"analysis", "say", "plan"};

// If `line` opens a field, returns its index and the offset of the value.
std::optional<std::pair<int, std::size_t>> header_of(std::string_view line) {
  std::string l = lower(line);
  std::size_t start = 0;
  while (start < l.size() && (l[start] == ' ' || l[start] == '\t' || l[start] == '*' ||
                              l[start] == '#'))
    ++start;
  for (std::string_view prefix : {"bob ", "alice "}) {
    if (l.compare(start, prefix.size(), prefix) == 0) {
      start += prefix.size();
      break;
    }
  }
  for (int f = 0; f < 3; ++f) {
    const auto& name = kFields[static_cast<std::size_t>(f)];
    if (l.compare(start, name.size(), name) != 0) continue;
    std::size_t p = start + name.size();
    while (p < l.size() && (l[p] == ' ' || l[p] == '*')) ++p;
    if (p < l.size() && l[p] == ':') return std::make_pair(f, p + 1);
  }
  return std::nullopt;
}

}  // namespace

bool PlannerOutput::silent() const {
  std::string s = trim(say);
  return s.empty() || s == kNothing;
}

bool PlannerOutput::ends_conversation() const { return say.find(kEnd) != std::string::npos; }

std::optional<PlannerOutput> parse_planner_output(std::string_view text, std::string* why) {
  std::array<std::optional<std::string>, 3> fields;
  int current = -1;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (auto h = header_of(line)) {
      current = h->first;
      auto& slot = fields[static_cast<std::size_t>(current)];
      std::string value = trim(line.substr(h->second));
      if (slot && !slot->empty()) {
        if (!value.empty()) *slot += "\n" + value;
      } else {
        slot = value;
      }
    } else if (current >= 0) {
      std::string value = trim(line);
      auto& slot = fields[static_cast<std::size_t>(current)];
      if (!value.empty()) *slot += slot->empty() ? value : "\n" + value;
    }
    pos = nl + 1;
  }
  std::string missing;
  for (std::size_t f = 0; f < 3; ++f) {
    if (!fields[f]) {
      if (!missing.empty()) missing += ", ";
      missing += kFields[f];
    }
  }
  if (!missing.empty()) {
    if (why) *why = "missing field(s): " + missing;
    return std::nullopt;
  }
  return PlannerOutput{*fields[0], *fields[1], *fields[2]};
}

std::string format_planner_output(const PlannerOutput& out) {
  return "Analysis: " + out.analysis + "\nSay: " + out.say + "\nPlan: " + out.plan + "\n";
}

}  // namespace collab::harness
