#include "collab/env/world.hpp"

#include <algorithm>
#include <sstream>

namespace collab::env {
namespace {

void insert_sorted(std::vector<std::string>& v, const std::string& item) {
  v.insert(std::upper_bound(v.begin(), v.end(), item), item);
}

bool erase_one(std::vector<std::string>& v, const std::string& item) {
  auto it = std::find(v.begin(), v.end(), item);
  if (it == v.end()) return false;
  v.erase(it);
  return true;
}

std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

// Accumulates the outcome of a single agent's action.
struct Attempt {
  const WorldState& before;
  Agent agent;
  StepOutcome out;

  Attempt(const WorldState& s, Agent a) : before(s), agent(a), out{s, {}, std::nullopt} {}

  StepOutcome reject(StepErrorCode code, std::string message) {
    out.new_state = before;
    out.per_agent_results[agent] = AgentResult{false, StepError{code, std::move(message)}};
    return std::move(out);
  }

  StepOutcome accept() {
    out.per_agent_results[agent] = AgentResult{true, std::nullopt};
    return std::move(out);
  }
};

std::string who(Agent a) { return std::string(display_name(a)); }

std::string_view progressive(std::string_view process) {
  if (process == "cook") return "cooking";
  if (process == "bake") return "baking";
  if (process == "cut") return "cutting";
  if (process == "stir") return "stirring";
  return process;
}

}  // namespace

bool WorldState::operator==(const WorldState& other) const {
  bool same_layout = layout == other.layout || (layout && other.layout && *layout == *other.layout);
  return same_layout && timestep == other.timestep && time_limit == other.time_limit &&
         order == other.order && delivered == other.delivered && agents == other.agents &&
         elements == other.elements && wrong_deliveries == other.wrong_deliveries;
}

WorldState initial_state(std::shared_ptr<const Layout> layout, std::string order, int time_limit) {
  if (!layout) throw Error("initial_state: null layout");
  WorldState s;
  s.layout = std::move(layout);
  s.order = std::move(order);
  s.time_limit = time_limit;
  for (const auto& el : s.layout->elements()) {
    if (el.kind == ElementKind::utensil || el.kind == ElementKind::counter)
      s.elements.emplace(el.id, ElementState{});
  }
  return s;
}

std::string_view to_string(StepErrorCode code) {
  switch (code) {
    case StepErrorCode::no_such_element: return "NoSuchElement";
    case StepErrorCode::element_not_in_agent_space: return "ElementNotInAgentSpace";
    case StepErrorCode::hands_full: return "HandsFull";
    case StepErrorCode::hands_empty: return "HandsEmpty";
    case StepErrorCode::item_not_present: return "ItemNotPresent";
    case StepErrorCode::dish_required: return "DishRequired";
    case StepErrorCode::no_matching_synthesis_entry: return "NoMatchingSynthesisEntry";
    case StepErrorCode::utensil_busy: return "UtensilBusy";
    case StepErrorCode::counter_full: return "CounterFull";
    case StepErrorCode::wrong_delivery: return "WrongDelivery";
  }
  return "?";
}

StepOutcome apply_action(const WorldState& state, Agent agent, const Action& action) {
  Attempt at(state, agent);
  WorldState& s = at.out.new_state;
  AgentState& me = s.agent(agent);
  const Layout& layout = *state.layout;
  const std::string& f = action.func;

  // Resolves an element argument and checks reachability.
  auto reach = [&](const std::string& id, const ElementSpec*& el) -> std::optional<StepOutcome> {
    el = layout.find(id);
    if (!el) return at.reject(StepErrorCode::no_such_element, "there is no element named " + id);
    if (!reachable_by(el->owner, agent))
      return at.reject(StepErrorCode::element_not_in_agent_space,
                       id + " is not in " + who(agent) + "'s space");
    return std::nullopt;
  };
  auto need_args = [&](std::size_t n) -> std::optional<StepOutcome> {
    if (action.args.size() != n)
      return at.reject(StepErrorCode::no_such_element,
                       f + " expects " + std::to_string(n) + " argument(s)");
    return std::nullopt;
  };

  if (f == "wait") return at.accept();

  if (f == "pickup") {
    if (auto r = need_args(2)) return *r;
    const std::string& item = action.args[0];
    const ElementSpec* el = nullptr;
    if (auto r = reach(action.args[1], el)) return *r;
    if (me.holding)
      return at.reject(StepErrorCode::hands_full, who(agent) + " is already holding " + *me.holding);
    switch (el->kind) {
      case ElementKind::dispenser:
        if (std::find(el->items.begin(), el->items.end(), item) == el->items.end())
          return at.reject(StepErrorCode::item_not_present, el->id + " does not provide " + item);
        me.holding = item;
        return at.accept();
      case ElementKind::utensil:
      case ElementKind::counter: {
        ElementState& es = s.elements.at(el->id);
        if (es.processing)
          return at.reject(StepErrorCode::utensil_busy, el->id + " is still processing");
        if (!erase_one(es.contents, item))
          return at.reject(StepErrorCode::item_not_present, el->id + " does not contain " + item);
        me.holding = item;
        return at.accept();
      }
      case ElementKind::delivery:
        return at.reject(StepErrorCode::item_not_present, "nothing can be picked up from " + el->id);
    }
  }

  if (f == "put_obj_in_utensil") {
    if (auto r = need_args(1)) return *r;
    const ElementSpec* el = nullptr;
    if (auto r = reach(action.args[0], el)) return *r;
    if (el->kind != ElementKind::utensil)
      return at.reject(StepErrorCode::no_such_element, el->id + " is not a utensil");
    if (!me.holding) return at.reject(StepErrorCode::hands_empty, who(agent) + " holds nothing");
    ElementState& es = s.elements.at(el->id);
    if (es.processing) return at.reject(StepErrorCode::utensil_busy, el->id + " is still processing");
    insert_sorted(es.contents, *me.holding);
    me.holding.reset();
    return at.accept();
  }

  if (f == "place_obj_on_counter") {
    if (auto r = need_args(0)) return *r;
    if (!me.holding) return at.reject(StepErrorCode::hands_empty, who(agent) + " holds nothing");
    const ElementSpec& counter = layout.counter();
    ElementState& es = s.elements.at(counter.id);
    if (counter.capacity && es.contents.size() >= *counter.capacity)
      return at.reject(StepErrorCode::counter_full, "the counter is full");
    insert_sorted(es.contents, *me.holding);
    me.holding.reset();
    return at.accept();
  }

  if (f == "cut" || f == "stir" || f == "cook" || f == "bake") {
    if (auto r = need_args(1)) return *r;
    const ElementSpec* el = nullptr;
    if (auto r = reach(action.args[0], el)) return *r;
    if (el->kind != ElementKind::utensil)
      return at.reject(StepErrorCode::no_such_element, el->id + " is not a utensil");
    ElementState& es = s.elements.at(el->id);
    if (es.processing) return at.reject(StepErrorCode::utensil_busy, el->id + " is still processing");
    for (const auto& entry : el->synthesis) {
      if (entry.process == f && entry.inputs == es.contents) {
        es.processing = Processing{f, entry.output, entry.duration};
        return at.accept();
      }
    }
    std::string have = es.contents.empty() ? "nothing" : join(es.contents, ", ");
    return at.reject(StepErrorCode::no_matching_synthesis_entry,
                     "cannot " + f + " " + have + " in " + el->id);
  }

  if (f == "fill_dish_with_food") {
    if (auto r = need_args(1)) return *r;
    const ElementSpec* el = nullptr;
    if (auto r = reach(action.args[0], el)) return *r;
    if (el->kind != ElementKind::utensil)
      return at.reject(StepErrorCode::no_such_element, el->id + " is not a utensil");
    if (!me.holding) return at.reject(StepErrorCode::hands_empty, who(agent) + " holds nothing");
    if (*me.holding != "dish")
      return at.reject(StepErrorCode::dish_required, who(agent) + " must hold a dish to fill");
    ElementState& es = s.elements.at(el->id);
    if (es.processing) return at.reject(StepErrorCode::utensil_busy, el->id + " is still processing");
    if (es.contents.size() != 1)
      return at.reject(StepErrorCode::item_not_present, el->id + " holds no finished food");
    me.holding = es.contents.front();
    es.contents.clear();
    return at.accept();
  }

  if (f == "deliver") {
    if (auto r = need_args(0)) return *r;
    bool can_deliver = false;
    for (const auto& el : layout.elements())
      if (el.kind == ElementKind::delivery && reachable_by(el.owner, agent)) can_deliver = true;
    if (!can_deliver)
      return at.reject(StepErrorCode::element_not_in_agent_space,
                       "the delivery location is not in " + who(agent) + "'s space");
    if (!me.holding) return at.reject(StepErrorCode::hands_empty, who(agent) + " holds nothing");
    std::string item = *me.holding;
    me.holding.reset();
    if (item == s.order) {
      s.delivered = true;
      at.out.delivered_correct = true;
      return at.accept();
    }
    s.wrong_deliveries.push_back(item);
    at.out.delivered_correct = false;
    at.out.per_agent_results[agent] =
        AgentResult{true, StepError{StepErrorCode::wrong_delivery,
                                    "delivered " + item + " but the order is " + s.order}};
    return std::move(at.out);
  }

  return at.reject(StepErrorCode::no_such_element, "unknown action " + f);
}

StepOutcome step(const WorldState& state, const std::array<std::optional<Action>, 2>& actions) {
  StepOutcome total{state, {}, std::nullopt};
  for (Agent a : kAgents) {
    const auto& act = actions[index_of(a)];
    if (!act) continue;
    StepOutcome one = apply_action(total.new_state, a, *act);
    total.new_state = std::move(one.new_state);
    total.per_agent_results[a] = one.per_agent_results[a];
    if (one.delivered_correct) total.delivered_correct = one.delivered_correct;
  }
  return total;
}

WorldState tick(const WorldState& state) {
  if (state.timestep + 1 > state.time_limit) throw TimeLimitExceeded();
  WorldState s = state;
  ++s.timestep;
  for (auto& [id, es] : s.elements) {
    if (!es.processing) continue;
    if (--es.processing->remaining <= 0) {
      es.contents = {es.processing->output};
      es.processing.reset();
    }
  }
  return s;
}

std::string space_line(const Layout& layout, Agent owner) {
  std::vector<std::string> ids;
  for (const auto& el : layout.elements()) {
    if (el.kind == ElementKind::delivery) continue;
    bool listed = el.kind == ElementKind::counter
                      ? (!el.listed_in_space_of || *el.listed_in_space_of == owner)
                      : reachable_by(el.owner, owner) && el.owner != Owner::shared;
    if (listed) ids.push_back(el.id);
  }
  return std::string(display_name(owner)) + " space:" + join(ids, "  ");
}

std::string observe(const WorldState& state, Agent viewer) {
  const Layout& layout = *state.layout;
  std::ostringstream os;
  os << space_line(layout, Agent::bob) << '\n';
  os << space_line(layout, Agent::alice) << '\n';
  os << "Order:" << state.order << '\n';
  os << "Scene " << state.timestep << ":";
  for (Agent a : kAgents) {
    const AgentState& ag = state.agent(a);
    os << " <" << display_name(a) << "> holds "
       << (ag.holding ? "one " + *ag.holding : std::string("nothing")) << ".";
    os << " The planned sequence of actions (yet to be performed) for " << display_name(a)
       << " is " << lang::render_plan(ag.pending_plan);
  }
  os << " Kitchen states:";
  for (const auto& el : layout.elements()) {
    if (el.kind != ElementKind::utensil) continue;
    const ElementState& es = state.elements.at(el.id);
    os << " <" << el.id << "> ";
    if (es.processing) {
      os << "is " << progressive(es.processing->process) << " " << join(es.contents, ", ") << " ("
         << es.processing->remaining << " timesteps left)";
    } else if (es.contents.empty()) {
      os << "is empty";
    } else {
      os << "contains " << join(es.contents, ", ");
    }
    os << ";";
  }
  const ElementSpec& counter = layout.counter();
  const ElementState& cs = state.elements.at(counter.id);
  os << " " << counter.display_count << " counters can be visited by <" << display_name(viewer)
     << ">. Their states are as follows: counters have "
     << (cs.contents.empty() ? std::string("nothing") : join(cs.contents, ", "));
  return os.str();
}

nlohmann::json to_json(const WorldState& state) {
  using nlohmann::json;
  json j;
  j["timestep"] = state.timestep;
  j["time_limit"] = state.time_limit;
  j["order"] = state.order;
  j["delivered"] = state.delivered;
  json agents = json::object();
  for (Agent a : kAgents) {
    const AgentState& ag = state.agent(a);
    agents[std::string(to_string(a))] = {
        {"holding", ag.holding ? json(*ag.holding) : json(nullptr)},
        {"pending_plan", lang::canonical_all(ag.pending_plan)},
    };
  }
  j["agents"] = agents;
  json elements = json::object();
  for (const auto& [id, es] : state.elements) {
    json e = {{"contents", es.contents}, {"processing", nullptr}};
    if (es.processing)
      e["processing"] = {{"process", es.processing->process},
                         {"output", es.processing->output},
                         {"remaining", es.processing->remaining}};
    elements[id] = e;
  }
  j["elements"] = elements;
  j["wrong_deliveries"] = state.wrong_deliveries;
  return j;
}

std::map<std::string, int> item_census(const WorldState& state) {
  std::map<std::string, int> out;
  for (const auto& ag : state.agents)
    if (ag.holding) ++out[*ag.holding];
  for (const auto& [id, es] : state.elements)
    for (const auto& item : es.contents) ++out[item];
  return out;
}

}  // namespace collab::env
