#include "collab/env/layout.hpp"

#include <algorithm>

namespace collab::env {

std::string_view to_string(ElementKind k) {
  switch (k) {
    case ElementKind::utensil: return "utensil";
    case ElementKind::dispenser: return "dispenser";
    case ElementKind::counter: return "counter";
    case ElementKind::delivery: return "delivery";
  }
  return "?";
}

std::string_view to_string(Owner o) {
  switch (o) {
    case Owner::bob: return "bob";
    case Owner::alice: return "alice";
    case Owner::shared: return "shared";
  }
  return "?";
}

std::optional<ElementKind> element_kind_from_string(std::string_view s) {
  if (s == "utensil") return ElementKind::utensil;
  if (s == "dispenser") return ElementKind::dispenser;
  if (s == "counter") return ElementKind::counter;
  if (s == "delivery") return ElementKind::delivery;
  return std::nullopt;
}

std::optional<Owner> owner_from_string(std::string_view s) {
  if (s == "bob" || s == "agent_0") return Owner::bob;
  if (s == "alice" || s == "agent_1") return Owner::alice;
  if (s == "shared") return Owner::shared;
  return std::nullopt;
}

std::set<std::string> ElementSpec::processes() const {
  std::set<std::string> out;
  for (const auto& e : synthesis) out.insert(e.process);
  return out;
}

Layout::Layout(std::vector<ElementSpec> elements, std::map<std::string, double> order_probability)
    : elements_(std::move(elements)), order_probability_(std::move(order_probability)) {
  for (auto& el : elements_) {
    for (auto& entry : el.synthesis) std::sort(entry.inputs.begin(), entry.inputs.end());
  }
  check();
  for (const auto& el : elements_) {
    items_.insert(el.items.begin(), el.items.end());
    for (const auto& entry : el.synthesis) {
      items_.insert(entry.inputs.begin(), entry.inputs.end());
      items_.insert(entry.output);
    }
  }
}

void Layout::check() const {
  std::set<std::string> ids;
  int counters = 0;
  for (const auto& el : elements_) {
    if (el.id.empty()) throw Error("layout element with empty id");
    if (!ids.insert(el.id).second) throw Error("duplicate layout element '" + el.id + "'");
    if (el.kind == ElementKind::counter) {
      ++counters;
      if (el.owner != Owner::shared) throw Error("counter '" + el.id + "' must be shared");
    }
    if (el.kind != ElementKind::utensil && !el.synthesis.empty())
      throw Error("only utensils may carry a synthesis table ('" + el.id + "')");
    if (el.kind != ElementKind::dispenser && !el.items.empty())
      throw Error("only dispensers may list items ('" + el.id + "')");
    std::set<std::pair<std::vector<std::string>, std::string>> keys;
    for (const auto& entry : el.synthesis) {
      if (entry.inputs.empty()) throw Error("synthesis entry without inputs in '" + el.id + "'");
      if (entry.duration < 1) throw Error("synthesis duration must be >= 1 in '" + el.id + "'");
      if (entry.output.empty()) throw Error("synthesis entry without output in '" + el.id + "'");
      if (!keys.emplace(entry.inputs, entry.process).second)
        throw Error("duplicate (inputs, process) synthesis entry in '" + el.id + "'");
    }
  }
  if (counters != 1) throw Error("layout must contain exactly one shared counter");
}

const ElementSpec* Layout::find(std::string_view id) const {
  for (const auto& el : elements_)
    if (el.id == id) return &el;
  return nullptr;
}

const ElementSpec& Layout::counter() const {
  for (const auto& el : elements_)
    if (el.kind == ElementKind::counter) return el;
  throw Error("layout has no counter");
}

bool Layout::knows_item(std::string_view item) const {
  return items_.find(std::string(item)) != items_.end();
}

std::optional<std::string> process_verb(std::string_view func) {
  if (func == "cook") return "pot";
  if (func == "bake") return "oven";
  if (func == "cut") return "chopping board";
  if (func == "stir") return "blender";
  return std::nullopt;
}

}  // namespace collab::env
