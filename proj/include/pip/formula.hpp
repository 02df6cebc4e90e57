#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pip::eg {

// Core first-order AST: atoms (zero-ary or applied predicates), equality,
// negation, conjunction, existential quantification, and the empty
// conjunction (truth). Disjunction and implication are desugared at parse
// time and never appear here.
enum class NodeKind { Truth, Atom, Equal, Not, And, Exists };

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
  NodeKind kind;

  // Atom
  std::string name;               // predicate name
  std::vector<std::string> args;  // variable arguments, empty = propositional

  // Equal
  std::string lhs, rhs;

  // Not / Exists body, And children
  Formula left;   // Not/Exists body, And lhs
  Formula right;  // And rhs

  // Exists
  std::string var;
};

Formula mk_truth();
Formula mk_atom(std::string name, std::vector<std::string> args = {});
Formula mk_equal(std::string lhs, std::string rhs);
Formula mk_not(Formula body);
Formula mk_and(Formula lhs, Formula rhs);
Formula mk_exists(std::string var, Formula body);

// Left-associative fold of a conjunct list; empty list yields Truth.
Formula mk_conjunction(const std::vector<Formula>& conjuncts);

// Structural equality (exact, no alpha-renaming).
bool structurally_equal(const Formula& a, const Formula& b);

// Equality up to bound-variable renaming.
bool alpha_equal(const Formula& a, const Formula& b);

// Predicate names occurring in the formula, lowercased.
std::set<std::string> predicate_names(const Formula& f);

bool has_quantifier(const Formula& f);
bool has_equality(const Formula& f);

// Parses the ASCII/Unicode/token grammar:
//   exists x. (...)   &   ~   |   ->   =
//   ∃ ∧ ¬ ∨ →
//   \exists \land \lnot \neg \wedge \lor \rightarrow
// Disjunction and implication are desugared; the result is a closed formula
// (a free variable raises a ValidationError naming it).
Formula parse_formula(const std::string& text);

enum class FormulaSyntax { Ascii, Unicode, LatexTokens };

// Renders with minimal parentheses (precedence: ~ > & > quantifier body).
// parse_formula(render_formula(f)) is the identity for Ascii and Unicode.
std::string render_formula(const Formula& f, FormulaSyntax syntax);

// Truth-table equivalence for quantifier- and equality-free formulas with
// at most 20 distinct atoms.
bool equivalent_propositional(const Formula& f, const Formula& g);

// One interpretation over a finite domain {0..domain_size-1}: for every
// predicate, the set of argument tuples it holds on.
struct CounterModel {
  int domain_size = 0;
  // (predicate name, tuples where it holds)
  std::vector<std::pair<std::string, std::vector<std::vector<int>>>> predicates;
  bool f_value = false;  // value of the first formula under this model
  std::string describe() const;
};

struct BoundedResult {
  bool equivalent = true;
  int bound = 0;  // highest domain size checked
  std::optional<CounterModel> counter_model;
};

// Exhaustively enumerates interpretations over domains of size 1..max_domain
// in canonical order and returns the first distinguishing one, if any.
// Requires closed formulas and predicate arity <= 2.
BoundedResult equivalent_bounded(const Formula& f, const Formula& g,
                                 int max_domain = 3);

namespace detail {
// Parses the longest formula prefix; returns the formula and the byte offset
// where parsing stopped. Does not require closedness.
std::pair<Formula, size_t> parse_formula_prefix(const std::string& text);
bool is_closed(const Formula& f);
}  // namespace detail

}  // namespace pip::eg
