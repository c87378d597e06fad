#include "collab/lang/action.hpp"

#include <cctype>

namespace collab::lang {
namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool is_quote(char c) { return c == '\'' || c == '"' || c == '`'; }

// Single-pass recursive descent over the plan text. Positions are byte offsets
// into the original input so errors can point at the offending token.
class PlanParser {
 public:
  explicit PlanParser(std::string_view text) : text_(text) {}

  ParseResult run() {
    ParseResult result;
    skip_separators();
    while (!at_end()) {
      if (skip_protocol_token()) {
        skip_separators();
        continue;
      }
      auto action = parse_item();
      if (!action) {
        result.actions.clear();
        result.error = error_;
        return result;
      }
      result.actions.push_back(std::move(*action));
      skip_ws();
      if (!at_end() && peek() == '.') ++pos_;
      skip_ws();
      if (at_end()) break;
      if (skip_protocol_token()) {
        skip_separators();
        continue;
      }
      if (!is_separator(peek()) && !(peek() == ']' && closes_list())) {
        fail("expected ';' or newline between actions");
        result.actions.clear();
        result.error = error_;
        return result;
      }
      skip_separators();
    }
    return result;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  static bool is_separator(char c) {
    return c == ';' || c == '\n' || c == '\r' || c == ',';
  }

  void skip_ws() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_separators() {
    while (!at_end()) {
      char c = peek();
      if (c == ' ' || c == '\t' || is_separator(c)) {
        ++pos_;
      } else if (c == '[' && pos_ == leading_bracket_candidate()) {
        ++pos_;  // "[a(), b()]" list form
      } else if (c == ']' && closes_list()) {
        ++pos_;
      } else if (is_bullet()) {
        skip_bullet();
      } else {
        break;
      }
    }
  }

  std::size_t leading_bracket_candidate() const {
    std::size_t i = 0;
    while (i < text_.size() && std::isspace(static_cast<unsigned char>(text_[i]))) ++i;
    // Only a bracket that does not start a protocol token like "[END]".
    if (i < text_.size() && text_[i] == '[' && !is_protocol_token_at(i)) return i;
    return std::string_view::npos;
  }

  bool closes_list() const {
    std::size_t i = pos_ + 1;
    while (i < text_.size() && std::isspace(static_cast<unsigned char>(text_[i]))) ++i;
    return leading_bracket_candidate() != std::string_view::npos &&
           (i == text_.size() || is_protocol_token_at(i));
  }

  // "[END]", "[NOTHING]" and similar all-caps bracketed protocol tokens.
  bool is_protocol_token_at(std::size_t i) const {
    if (i >= text_.size() || text_[i] != '[') return false;
    std::size_t j = i + 1;
    if (j >= text_.size() || !std::isupper(static_cast<unsigned char>(text_[j]))) return false;
    while (j < text_.size() &&
           (std::isupper(static_cast<unsigned char>(text_[j])) || text_[j] == '_' ||
            text_[j] == ' '))
      ++j;
    return j < text_.size() && text_[j] == ']';
  }

  bool skip_protocol_token() {
    if (!is_protocol_token_at(pos_)) return false;
    pos_ = text_.find(']', pos_) + 1;
    return true;
  }

  // "1." / "2)" / "-" / "*" list markers in front of an item.
  bool is_bullet() const {
    char c = peek();
    if (c == '-' || c == '*') return true;
    std::size_t j = pos_;
    while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
    return j > pos_ && j < text_.size() && (text_[j] == '.' || text_[j] == ')');
  }

  void skip_bullet() {
    if (peek() == '-' || peek() == '*') {
      ++pos_;
      return;
    }
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    ++pos_;
  }

  void fail(std::string message) {
    if (error_) return;
    ParseError e;
    e.offset = pos_;
    std::size_t end = pos_;
    while (end < text_.size() && !std::isspace(static_cast<unsigned char>(text_[end])) &&
           text_[end] != ';')
      ++end;
    e.token = std::string(text_.substr(pos_, end - pos_));
    e.message = std::move(message);
    error_ = e;
  }

  std::optional<std::string> parse_identifier() {
    if (at_end() || !is_ident_start(peek())) {
      fail("expected an action name");
      return std::nullopt;
    }
    std::size_t start = pos_;
    while (!at_end() && is_ident_char(peek())) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::optional<Action> parse_item() {
    std::size_t start = pos_;
    auto name = parse_identifier();
    if (!name) return std::nullopt;
    if (canonical_identifier(*name) == "request") {
      skip_ws();
      if (at_end() || peek() != '(') {
        pos_ = start;
        fail("expected '(' after request");
        return std::nullopt;
      }
      ++pos_;
      skip_ws();
      char quote = 0;
      if (!at_end() && is_quote(peek())) quote = text_[pos_++];
      skip_ws();
      std::size_t inner_start = pos_;
      auto inner_name = parse_identifier();
      if (!inner_name) return std::nullopt;
      if (canonical_identifier(*inner_name) == "request") {
        pos_ = inner_start;
        fail("request(...) cannot be nested");
        return std::nullopt;
      }
      auto inner = parse_call_tail(*inner_name);
      if (!inner) return std::nullopt;
      skip_ws();
      if (quote) {
        if (at_end() || peek() != quote) {
          fail("unterminated quote in request(...)");
          return std::nullopt;
        }
        ++pos_;
        skip_ws();
      }
      if (at_end() || peek() != ')') {
        fail("expected ')' closing request(...)");
        return std::nullopt;
      }
      ++pos_;
      inner->is_request = true;
      return inner;
    }
    return parse_call_tail(*name);
  }

  // Parses "(arg, arg, ...)" after an already consumed function name.
  std::optional<Action> parse_call_tail(const std::string& name) {
    Action action;
    action.func = canonical_identifier(name);
    skip_ws();
    if (at_end() || peek() != '(') {
      fail("expected '(' after '" + name + "'");
      return std::nullopt;
    }
    ++pos_;
    skip_ws();
    if (!at_end() && peek() == ')') {
      ++pos_;
      return action;
    }
    while (true) {
      skip_ws();
      std::size_t arg_start = pos_;
      while (!at_end() && peek() != ',' && peek() != ')' && peek() != '(' && peek() != ';' &&
             peek() != '\n')
        ++pos_;
      std::string_view raw = text_.substr(arg_start, pos_ - arg_start);
      std::string arg = canonical_identifier(raw);
      if (arg.empty()) {
        pos_ = arg_start;
        fail("empty argument");
        return std::nullopt;
      }
      action.args.push_back(std::move(arg));
      if (at_end()) {
        fail("unterminated argument list");
        return std::nullopt;
      }
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == ')') {
        ++pos_;
        return action;
      }
      fail("unexpected character in argument list");
      return std::nullopt;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::optional<ParseError> error_;
};

}  // namespace

std::string canonical_identifier(std::string_view raw) {
  std::string out;
  out.reserve(raw.size() + 4);
  char prev = 0;
  for (char c : raw) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (std::isupper(uc)) {
      if (prev && (std::islower(static_cast<unsigned char>(prev)) ||
                   std::isdigit(static_cast<unsigned char>(prev))))
        out.push_back('_');
      out.push_back(static_cast<char>(std::tolower(uc)));
    } else if (std::islower(uc) || std::isdigit(uc)) {
      out.push_back(c);
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
    prev = c;
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

ParseResult parse_plan(std::string_view text) { return PlanParser(text).run(); }

std::optional<Action> parse_action(std::string_view text) {
  auto r = parse_plan(text);
  if (!r.ok() || r.actions.size() != 1) return std::nullopt;
  return r.actions.front();
}

std::string canonical(const Action& action) {
  std::string s = action.func;
  s.push_back('(');
  for (std::size_t i = 0; i < action.args.size(); ++i) {
    if (i) s.push_back(',');
    s += action.args[i];
  }
  s.push_back(')');
  if (action.is_request) return "request(" + s + ")";
  return s;
}

std::vector<std::string> canonical_all(const std::vector<Action>& actions) {
  std::vector<std::string> out;
  out.reserve(actions.size());
  for (const auto& a : actions) out.push_back(canonical(a));
  return out;
}

std::string render_plan(const std::vector<Action>& actions) {
  std::string s = "[";
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) s.push_back(',');
    s += canonical(actions[i]);
  }
  s.push_back(']');
  return s;
}

}  // namespace collab::lang
