#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "pip/formula.hpp"

namespace pip::eg {

// Textual Existential Graph notation:
//   graph := "(sheet" entry* ")"
//   entry := lig | spot | cut
//   lig   := "(lig" NAME ")"
//   spot  := "(spot" NAME NAME* ")"
//   cut   := "(cut" entry* ")"
// Whitespace-insensitive; ";" starts a line comment.

struct Area;

struct Ligature {
  std::string name;
};

struct Spot {
  std::string predicate;
  std::vector<std::string> hooks;  // ligature names, in hook order
};

struct Cut {
  std::unique_ptr<Area> area;
};

using Entry = std::variant<Ligature, Spot, Cut>;

struct Area {
  std::vector<Entry> entries;
};

struct EGraph {
  Area sheet;
};

// Parses and validates: every hook must reference a ligature declared in an
// ancestor-or-same area; every ligature must be referenced by at least one
// hook; ligature names are unique in the graph.
EGraph parse_eg(const std::string& text);

// Endoporeutic (outside-in) translation:
//   F(area) = exists(ligatures declared here) .
//             conj(spot atoms) /\ conj(~F(child cut))
// Empty conjunction is truth; the empty cut therefore reads as ~truth.
Formula eg_to_formula(const EGraph& graph);

}  // namespace pip::eg
