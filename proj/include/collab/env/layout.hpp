#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "collab/common.hpp"

namespace collab::env {

enum class ElementKind { utensil, dispenser, counter, delivery };
enum class Owner { bob, alice, shared };

std::string_view to_string(ElementKind k);
std::string_view to_string(Owner o);
std::optional<ElementKind> element_kind_from_string(std::string_view s);
std::optional<Owner> owner_from_string(std::string_view s);

inline bool reachable_by(Owner owner, Agent agent) {
  return owner == Owner::shared ||
         (owner == Owner::bob && agent == Agent::bob) ||
         (owner == Owner::alice && agent == Agent::alice);
}

// One row of a utensil's synthesis table. `inputs` is kept sorted so that
// multiset comparison is plain vector equality.
struct SynthesisEntry {
  std::vector<std::string> inputs;
  std::string process;  // cook | bake | cut | stir
  int duration = 1;     // ticks until the output replaces the inputs
  std::string output;

  bool operator==(const SynthesisEntry&) const = default;
};

struct ElementSpec {
  std::string id;
  ElementKind kind = ElementKind::counter;
  Owner owner = Owner::shared;
  std::vector<std::string> items;        // dispenser inventory, never depletes
  std::vector<SynthesisEntry> synthesis;  // utensils only
  std::optional<std::size_t> capacity;   // counters only; unbounded when empty
  int display_count = 1;                 // "3 counters can be visited by ..."
  // Counters only: whose space line names the counter. Unset lists it in both.
  std::optional<Agent> listed_in_space_of;

  bool operator==(const ElementSpec&) const = default;

  // Process actions this utensil supports, derived from its synthesis table.
  std::set<std::string> processes() const;
};

// Immutable kitchen description shared by every WorldState of an episode.
// Element order is significant: it is the order used when rendering
// observations.
class Layout {
 public:
  Layout() = default;
  explicit Layout(std::vector<ElementSpec> elements,
                  std::map<std::string, double> order_probability = {});

  const std::vector<ElementSpec>& elements() const { return elements_; }
  const std::map<std::string, double>& order_probability() const {
    return order_probability_;
  }

  const ElementSpec* find(std::string_view id) const;
  // The single shared counter element.
  const ElementSpec& counter() const;

  // Every item name that can exist in this kitchen: dispenser inventories plus
  // synthesis inputs and outputs.
  const std::set<std::string>& item_universe() const { return items_; }
  bool knows_item(std::string_view item) const;

  bool operator==(const Layout& other) const { return elements_ == other.elements_; }

 private:
  void check() const;

  std::vector<ElementSpec> elements_;
  std::map<std::string, double> order_probability_;
  std::set<std::string> items_;
};

// The utensil that performs a given process action ("cook" -> pot, ...).
// Used for validator messages only; ownership comes from the layout.
std::optional<std::string> process_verb(std::string_view func);

}  // namespace collab::env
