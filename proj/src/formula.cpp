#include "pip/formula.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <sstream>

#include "pip/errors.hpp"

namespace pip::eg {

namespace {

Formula node(FormulaNode n) {
  return std::make_shared<const FormulaNode>(std::move(n));
}

}  // namespace

Formula mk_truth() { return node({.kind = NodeKind::Truth}); }

Formula mk_atom(std::string name, std::vector<std::string> args) {
  FormulaNode n{.kind = NodeKind::Atom};
  n.name = std::move(name);
  n.args = std::move(args);
  return node(std::move(n));
}

Formula mk_equal(std::string lhs, std::string rhs) {
  FormulaNode n{.kind = NodeKind::Equal};
  n.lhs = std::move(lhs);
  n.rhs = std::move(rhs);
  return node(std::move(n));
}

Formula mk_not(Formula body) {
  FormulaNode n{.kind = NodeKind::Not};
  n.left = std::move(body);
  return node(std::move(n));
}

Formula mk_and(Formula lhs, Formula rhs) {
  FormulaNode n{.kind = NodeKind::And};
  n.left = std::move(lhs);
  n.right = std::move(rhs);
  return node(std::move(n));
}

Formula mk_exists(std::string var, Formula body) {
  FormulaNode n{.kind = NodeKind::Exists};
  n.var = std::move(var);
  n.left = std::move(body);
  return node(std::move(n));
}

Formula mk_conjunction(const std::vector<Formula>& conjuncts) {
  if (conjuncts.empty()) return mk_truth();
  Formula acc = conjuncts.front();
  for (size_t i = 1; i < conjuncts.size(); ++i) acc = mk_and(acc, conjuncts[i]);
  return acc;
}

bool structurally_equal(const Formula& a, const Formula& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case NodeKind::Truth:
      return true;
    case NodeKind::Atom:
      return a->name == b->name && a->args == b->args;
    case NodeKind::Equal:
      return a->lhs == b->lhs && a->rhs == b->rhs;
    case NodeKind::Not:
      return structurally_equal(a->left, b->left);
    case NodeKind::And:
      return structurally_equal(a->left, b->left) &&
             structurally_equal(a->right, b->right);
    case NodeKind::Exists:
      return a->var == b->var && structurally_equal(a->left, b->left);
  }
  return false;
}

namespace {

bool alpha_equal_rec(const Formula& a, const Formula& b,
                     std::map<std::string, int>& ma,
                     std::map<std::string, int>& mb, int& next) {
  if (a->kind != b->kind) return false;
  auto var_eq = [&](const std::string& va, const std::string& vb) {
    auto ia = ma.find(va);
    auto ib = mb.find(vb);
    if (ia == ma.end() || ib == mb.end())
      return ia == ma.end() && ib == mb.end() && va == vb;
    return ia->second == ib->second;
  };
  switch (a->kind) {
    case NodeKind::Truth:
      return true;
    case NodeKind::Atom:
      if (a->name != b->name || a->args.size() != b->args.size()) return false;
      for (size_t i = 0; i < a->args.size(); ++i)
        if (!var_eq(a->args[i], b->args[i])) return false;
      return true;
    case NodeKind::Equal:
      return var_eq(a->lhs, b->lhs) && var_eq(a->rhs, b->rhs);
    case NodeKind::Not:
      return alpha_equal_rec(a->left, b->left, ma, mb, next);
    case NodeKind::And:
      return alpha_equal_rec(a->left, b->left, ma, mb, next) &&
             alpha_equal_rec(a->right, b->right, ma, mb, next);
    case NodeKind::Exists: {
      auto olda = ma.find(a->var) != ma.end()
                      ? std::optional<int>(ma[a->var])
                      : std::nullopt;
      auto oldb = mb.find(b->var) != mb.end()
                      ? std::optional<int>(mb[b->var])
                      : std::nullopt;
      ma[a->var] = next;
      mb[b->var] = next;
      ++next;
      bool ok = alpha_equal_rec(a->left, b->left, ma, mb, next);
      if (olda)
        ma[a->var] = *olda;
      else
        ma.erase(a->var);
      if (oldb)
        mb[b->var] = *oldb;
      else
        mb.erase(b->var);
      return ok;
    }
  }
  return false;
}

}  // namespace

bool alpha_equal(const Formula& a, const Formula& b) {
  std::map<std::string, int> ma, mb;
  int next = 0;
  return alpha_equal_rec(a, b, ma, mb, next);
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

void collect_predicates(const Formula& f, std::set<std::string>& out) {
  switch (f->kind) {
    case NodeKind::Atom:
      out.insert(lower(f->name));
      break;
    case NodeKind::Not:
    case NodeKind::Exists:
      collect_predicates(f->left, out);
      break;
    case NodeKind::And:
      collect_predicates(f->left, out);
      collect_predicates(f->right, out);
      break;
    default:
      break;
  }
}

}  // namespace

std::set<std::string> predicate_names(const Formula& f) {
  std::set<std::string> out;
  collect_predicates(f, out);
  return out;
}

bool has_quantifier(const Formula& f) {
  switch (f->kind) {
    case NodeKind::Exists:
      return true;
    case NodeKind::Not:
      return has_quantifier(f->left);
    case NodeKind::And:
      return has_quantifier(f->left) || has_quantifier(f->right);
    default:
      return false;
  }
}

bool has_equality(const Formula& f) {
  switch (f->kind) {
    case NodeKind::Equal:
      return true;
    case NodeKind::Not:
    case NodeKind::Exists:
      return has_equality(f->left);
    case NodeKind::And:
      return has_equality(f->left) || has_equality(f->right);
    default:
      return false;
  }
}

// ---------------------------------------------------------------------------
// Lexer / parser
// ---------------------------------------------------------------------------

namespace {

enum class Tok {
  LParen,
  RParen,
  Comma,
  Dot,
  And,
  Or,
  Not,
  Implies,
  Equals,
  Exists,
  True,
  Ident,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  size_t pos;
};

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  size_t i = 0;
  auto starts = [&](const char* lit) {
    return s.compare(i, std::string::traits_type::length(lit), lit) == 0;
  };
  while (i < s.size()) {
    unsigned char c = s[i];
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    size_t pos = i;
    if (c == '(') {
      out.push_back({Tok::LParen, "(", pos});
      ++i;
    } else if (c == ')') {
      out.push_back({Tok::RParen, ")", pos});
      ++i;
    } else if (c == ',') {
      out.push_back({Tok::Comma, ",", pos});
      ++i;
    } else if (c == '.') {
      out.push_back({Tok::Dot, ".", pos});
      ++i;
    } else if (c == '&') {
      out.push_back({Tok::And, "&", pos});
      ++i;
    } else if (c == '|') {
      out.push_back({Tok::Or, "|", pos});
      ++i;
    } else if (c == '~') {
      out.push_back({Tok::Not, "~", pos});
      ++i;
    } else if (c == '=') {
      out.push_back({Tok::Equals, "=", pos});
      ++i;
    } else if (starts("->")) {
      out.push_back({Tok::Implies, "->", pos});
      i += 2;
    } else if (c == '-') {
      throw ParseError("formula lex error at position " + std::to_string(pos) +
                       ": '-' is only valid in '->'");
    } else if (starts("∃")) {  // ∃
      out.push_back({Tok::Exists, "∃", pos});
      i += 3;
    } else if (starts("∧")) {  // ∧
      out.push_back({Tok::And, "∧", pos});
      i += 3;
    } else if (starts("∨")) {  // ∨
      out.push_back({Tok::Or, "∨", pos});
      i += 3;
    } else if (starts("→")) {  // →
      out.push_back({Tok::Implies, "→", pos});
      i += 3;
    } else if (starts("¬")) {  // ¬
      out.push_back({Tok::Not, "¬", pos});
      i += 2;
    } else if (starts("⊤")) {  // ⊤
      out.push_back({Tok::True, "⊤", pos});
      i += 3;
    } else if (c == '\\') {
      size_t j = i + 1;
      while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j])))
        ++j;
      std::string word = s.substr(i + 1, j - i - 1);
      if (word == "exists")
        out.push_back({Tok::Exists, word, pos});
      else if (word == "land" || word == "wedge")
        out.push_back({Tok::And, word, pos});
      else if (word == "lor" || word == "vee")
        out.push_back({Tok::Or, word, pos});
      else if (word == "lnot" || word == "neg")
        out.push_back({Tok::Not, word, pos});
      else if (word == "rightarrow" || word == "to")
        out.push_back({Tok::Implies, word, pos});
      else if (word == "top")
        out.push_back({Tok::True, word, pos});
      else
        throw ParseError("formula lex error at position " +
                         std::to_string(pos) + ": unknown token \\" + word);
      i = j;
    } else if (std::isalpha(c) || c == '_') {
      size_t j = i;
      while (j < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_'))
        ++j;
      std::string word = s.substr(i, j - i);
      if (word == "exists")
        out.push_back({Tok::Exists, word, pos});
      else if (word == "true")
        out.push_back({Tok::True, word, pos});
      else
        out.push_back({Tok::Ident, word, pos});
      i = j;
    } else {
      throw ParseError("formula lex error at position " + std::to_string(pos) +
                       ": unexpected character");
    }
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Formula parse() {
    Formula f = formula();
    expect(Tok::End, "end of input");
    return f;
  }

  // Parses one formula and stops at the first token that cannot continue it.
  // Used by the auto-scorer's substring extraction.
  std::pair<Formula, size_t> parse_prefix() {
    Formula f = formula();
    return {f, toks_[idx_].pos};
  }

 private:
  const Token& peek() const { return toks_[idx_]; }
  Token take() { return toks_[idx_++]; }

  void expect(Tok kind, const std::string& what) {
    if (peek().kind != kind)
      throw ParseError("formula parse error at position " +
                       std::to_string(peek().pos) + ": expected " + what);
    take();
  }

  // formula := implication; implication is right-associative.
  Formula formula() {
    Formula lhs = disjunction();
    if (peek().kind == Tok::Implies) {
      take();
      Formula rhs = formula();
      // a -> b  ==>  ~(a & ~b)
      return mk_not(mk_and(lhs, mk_not(rhs)));
    }
    return lhs;
  }

  Formula disjunction() {
    Formula acc = conjunction();
    while (peek().kind == Tok::Or) {
      take();
      Formula rhs = conjunction();
      // a | b  ==>  ~(~a & ~b)
      acc = mk_not(mk_and(mk_not(acc), mk_not(rhs)));
    }
    return acc;
  }

  Formula conjunction() {
    Formula acc = unary();
    while (peek().kind == Tok::And) {
      take();
      acc = mk_and(acc, unary());
    }
    return acc;
  }

  Formula unary() {
    if (peek().kind == Tok::Not) {
      take();
      return mk_not(unary());
    }
    if (peek().kind == Tok::Exists) {
      take();
      if (peek().kind != Tok::Ident)
        throw ParseError("formula parse error at position " +
                         std::to_string(peek().pos) +
                         ": expected variable after quantifier");
      std::string var = take().text;
      if (peek().kind == Tok::Dot) take();  // dot optional: "∃x (...)"
      return mk_exists(var, formula());
    }
    return atom();
  }

  Formula atom() {
    if (peek().kind == Tok::LParen) {
      take();
      Formula f = formula();
      expect(Tok::RParen, "')'");
      return f;
    }
    if (peek().kind == Tok::True) {
      take();
      return mk_truth();
    }
    if (peek().kind != Tok::Ident)
      throw ParseError("formula parse error at position " +
                       std::to_string(peek().pos) + ": expected an atom");
    std::string name = take().text;
    if (peek().kind == Tok::LParen) {
      take();
      std::vector<std::string> args;
      if (peek().kind != Tok::RParen) {
        for (;;) {
          if (peek().kind != Tok::Ident)
            throw ParseError("formula parse error at position " +
                             std::to_string(peek().pos) +
                             ": expected a variable argument");
          args.push_back(take().text);
          if (peek().kind == Tok::Comma) {
            take();
            continue;
          }
          break;
        }
      }
      expect(Tok::RParen, "')'");
      return mk_atom(std::move(name), std::move(args));
    }
    if (peek().kind == Tok::Equals) {
      take();
      if (peek().kind != Tok::Ident)
        throw ParseError("formula parse error at position " +
                         std::to_string(peek().pos) +
                         ": expected a variable after '='");
      return mk_equal(std::move(name), take().text);
    }
    return mk_atom(std::move(name));
  }

  std::vector<Token> toks_;
  size_t idx_ = 0;
};

void check_closed(const Formula& f, std::set<std::string>& bound) {
  auto check_var = [&](const std::string& v) {
    if (!bound.count(v))
      throw ValidationError("free variable '" + v + "' in formula");
  };
  switch (f->kind) {
    case NodeKind::Atom:
      for (const auto& a : f->args) check_var(a);
      break;
    case NodeKind::Equal:
      check_var(f->lhs);
      check_var(f->rhs);
      break;
    case NodeKind::Not:
      check_closed(f->left, bound);
      break;
    case NodeKind::And:
      check_closed(f->left, bound);
      check_closed(f->right, bound);
      break;
    case NodeKind::Exists: {
      bool inserted = bound.insert(f->var).second;
      check_closed(f->left, bound);
      if (inserted) bound.erase(f->var);
      break;
    }
    case NodeKind::Truth:
      break;
  }
}

}  // namespace

Formula parse_formula(const std::string& text) {
  Parser parser(lex(text));
  Formula f = parser.parse();
  std::set<std::string> bound;
  check_closed(f, bound);
  return f;
}

namespace detail {

// Parses the longest formula prefix of `text`; returns the formula and the
// byte offset where parsing stopped. Does not require closedness.
std::pair<Formula, size_t> parse_formula_prefix(const std::string& text) {
  Parser parser(lex(text));
  return parser.parse_prefix();
}

bool is_closed(const Formula& f) {
  std::set<std::string> bound;
  try {
    check_closed(f, bound);
  } catch (const ValidationError&) {
    return false;
  }
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

struct SyntaxStrings {
  const char* and_op;
  const char* not_op;
  const char* exists_op;
  const char* exists_sep;  // between variable and body
  const char* truth;
};

SyntaxStrings strings_for(FormulaSyntax syntax) {
  switch (syntax) {
    case FormulaSyntax::Ascii:
      return {" & ", "~", "exists ", ". ", "true"};
    case FormulaSyntax::Unicode:
      return {" ∧ ", "¬", "∃", " ", "⊤"};
    case FormulaSyntax::LatexTokens:
      return {" \\land ", "\\lnot ", "\\exists ", ". ", "\\top"};
  }
  return {};
}

void render(const Formula& f, const SyntaxStrings& s, std::string& out) {
  switch (f->kind) {
    case NodeKind::Truth:
      out += s.truth;
      break;
    case NodeKind::Atom:
      out += f->name;
      if (!f->args.empty()) {
        out += '(';
        for (size_t i = 0; i < f->args.size(); ++i) {
          if (i) out += ", ";
          out += f->args[i];
        }
        out += ')';
      }
      break;
    case NodeKind::Equal:
      out += f->lhs;
      out += " = ";
      out += f->rhs;
      break;
    case NodeKind::Not: {
      out += s.not_op;
      bool parens = f->left->kind == NodeKind::And;
      if (parens) out += '(';
      render(f->left, s, out);
      if (parens) out += ')';
      break;
    }
    case NodeKind::And: {
      bool lp = f->left->kind == NodeKind::Exists;
      bool rp = f->right->kind == NodeKind::And ||
                f->right->kind == NodeKind::Exists;
      if (lp) out += '(';
      render(f->left, s, out);
      if (lp) out += ')';
      out += s.and_op;
      if (rp) out += '(';
      render(f->right, s, out);
      if (rp) out += ')';
      break;
    }
    case NodeKind::Exists: {
      out += s.exists_op;
      out += f->var;
      out += s.exists_sep;
      bool parens = f->left->kind == NodeKind::And;
      if (parens) out += '(';
      render(f->left, s, out);
      if (parens) out += ')';
      break;
    }
  }
}

}  // namespace

std::string render_formula(const Formula& f, FormulaSyntax syntax) {
  std::string out;
  render(f, strings_for(syntax), out);
  return out;
}

// ---------------------------------------------------------------------------
// Propositional equivalence
// ---------------------------------------------------------------------------

namespace {

void collect_prop_atoms(const Formula& f, std::vector<std::string>& atoms) {
  switch (f->kind) {
    case NodeKind::Truth:
      break;
    case NodeKind::Atom:
      if (!f->args.empty())
        throw ValidationError("applied predicate '" + f->name +
                              "' in propositional equivalence check");
      if (std::find(atoms.begin(), atoms.end(), f->name) == atoms.end())
        atoms.push_back(f->name);
      break;
    case NodeKind::Equal:
      throw ValidationError("equality in propositional equivalence check");
    case NodeKind::Not:
      collect_prop_atoms(f->left, atoms);
      break;
    case NodeKind::And:
      collect_prop_atoms(f->left, atoms);
      collect_prop_atoms(f->right, atoms);
      break;
    case NodeKind::Exists:
      throw ValidationError("quantifier in propositional equivalence check");
  }
}

bool eval_prop(const Formula& f, const std::map<std::string, bool>& val) {
  switch (f->kind) {
    case NodeKind::Truth:
      return true;
    case NodeKind::Atom:
      return val.at(f->name);
    case NodeKind::Not:
      return !eval_prop(f->left, val);
    case NodeKind::And:
      return eval_prop(f->left, val) && eval_prop(f->right, val);
    default:
      throw ValidationError("non-propositional node in truth-table evaluation");
  }
}

}  // namespace

bool equivalent_propositional(const Formula& f, const Formula& g) {
  std::vector<std::string> atoms;
  collect_prop_atoms(f, atoms);
  collect_prop_atoms(g, atoms);
  if (atoms.size() > 20)
    throw CapacityError("propositional check limited to 20 atoms, got " +
                        std::to_string(atoms.size()));
  const uint32_t n = static_cast<uint32_t>(atoms.size());
  for (uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::map<std::string, bool> val;
    for (uint32_t i = 0; i < n; ++i) val[atoms[i]] = (mask >> i) & 1u;
    if (eval_prop(f, val) != eval_prop(g, val)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Bounded model checking
// ---------------------------------------------------------------------------

namespace {

void collect_arities(const Formula& f, std::map<std::string, int>& arities) {
  switch (f->kind) {
    case NodeKind::Atom: {
      int arity = static_cast<int>(f->args.size());
      auto [it, inserted] = arities.emplace(f->name, arity);
      if (!inserted && it->second != arity)
        throw ValidationError("predicate '" + f->name +
                              "' used with inconsistent arities");
      break;
    }
    case NodeKind::Not:
    case NodeKind::Exists:
      collect_arities(f->left, arities);
      break;
    case NodeKind::And:
      collect_arities(f->left, arities);
      collect_arities(f->right, arities);
      break;
    default:
      break;
  }
}

struct Interpretation {
  int domain_size;
  // predicate name -> flat truth table over tuples in lexicographic order
  std::map<std::string, std::vector<bool>> tables;
  std::map<std::string, int> arities;

  bool holds(const std::string& pred, const std::vector<int>& tuple) const {
    size_t idx = 0;
    for (int a : tuple) idx = idx * domain_size + static_cast<size_t>(a);
    return tables.at(pred)[idx];
  }
};

bool eval_fo(const Formula& f, const Interpretation& interp,
             std::map<std::string, int>& env) {
  switch (f->kind) {
    case NodeKind::Truth:
      return true;
    case NodeKind::Atom: {
      std::vector<int> tuple;
      tuple.reserve(f->args.size());
      for (const auto& v : f->args) tuple.push_back(env.at(v));
      return interp.holds(f->name, tuple);
    }
    case NodeKind::Equal:
      return env.at(f->lhs) == env.at(f->rhs);
    case NodeKind::Not:
      return !eval_fo(f->left, interp, env);
    case NodeKind::And:
      return eval_fo(f->left, interp, env) && eval_fo(f->right, interp, env);
    case NodeKind::Exists: {
      auto old = env.find(f->var) != env.end()
                     ? std::optional<int>(env[f->var])
                     : std::nullopt;
      for (int d = 0; d < interp.domain_size; ++d) {
        env[f->var] = d;
        if (eval_fo(f->left, interp, env)) {
          if (old)
            env[f->var] = *old;
          else
            env.erase(f->var);
          return true;
        }
      }
      if (old)
        env[f->var] = *old;
      else
        env.erase(f->var);
      return false;
    }
  }
  return false;
}

CounterModel to_counter_model(const Interpretation& interp, bool f_value) {
  CounterModel cm;
  cm.domain_size = interp.domain_size;
  cm.f_value = f_value;
  for (const auto& [name, table] : interp.tables) {
    std::vector<std::vector<int>> tuples;
    int arity = interp.arities.at(name);
    size_t count = table.size();
    for (size_t idx = 0; idx < count; ++idx) {
      if (!table[idx]) continue;
      std::vector<int> tuple(arity);
      size_t rest = idx;
      for (int k = arity - 1; k >= 0; --k) {
        tuple[k] = static_cast<int>(rest % interp.domain_size);
        rest /= interp.domain_size;
      }
      tuples.push_back(std::move(tuple));
    }
    cm.predicates.emplace_back(name, std::move(tuples));
  }
  return cm;
}

}  // namespace

std::string CounterModel::describe() const {
  std::ostringstream os;
  os << "domain size " << domain_size << "; ";
  bool first_pred = true;
  for (const auto& [name, tuples] : predicates) {
    if (!first_pred) os << ", ";
    first_pred = false;
    os << name << " = {";
    for (size_t i = 0; i < tuples.size(); ++i) {
      if (i) os << ", ";
      os << "(";
      for (size_t j = 0; j < tuples[i].size(); ++j) {
        if (j) os << ",";
        os << tuples[i][j];
      }
      os << ")";
    }
    os << "}";
  }
  os << "; first formula " << (f_value ? "true" : "false")
     << ", second formula " << (f_value ? "false" : "true");
  return os.str();
}

BoundedResult equivalent_bounded(const Formula& f, const Formula& g,
                                 int max_domain) {
  if (max_domain < 1)
    throw ValidationError("bounded equivalence requires max_domain >= 1");
  if (!detail::is_closed(f) || !detail::is_closed(g))
    throw ValidationError("bounded equivalence requires closed formulas");

  std::map<std::string, int> arities;
  collect_arities(f, arities);
  collect_arities(g, arities);
  for (const auto& [name, arity] : arities) {
    if (arity > 2)
      throw CapacityError("predicate '" + name + "' has arity " +
                          std::to_string(arity) +
                          "; bounded checking supports arity <= 2");
  }

  for (int n = 1; n <= max_domain; ++n) {
    // Total truth-table bits across all predicates for this domain size.
    uint64_t total_bits = 0;
    std::vector<std::pair<std::string, uint64_t>> sizes;  // name, cell count
    for (const auto& [name, arity] : arities) {
      uint64_t cells = 1;
      for (int k = 0; k < arity; ++k) cells *= static_cast<uint64_t>(n);
      sizes.emplace_back(name, cells);
      total_bits += cells;
    }
    if (total_bits > 26)
      throw CapacityError(
          "interpretation space too large at domain size " +
          std::to_string(n) + " (" + std::to_string(total_bits) +
          " truth-table bits)");

    const uint64_t total = 1ull << total_bits;
    for (uint64_t mask = 0; mask < total; ++mask) {
      Interpretation interp;
      interp.domain_size = n;
      interp.arities = arities;
      uint64_t bit = 0;
      for (const auto& [name, cells] : sizes) {
        std::vector<bool> table(cells);
        for (uint64_t c = 0; c < cells; ++c, ++bit)
          table[c] = (mask >> bit) & 1ull;
        interp.tables.emplace(name, std::move(table));
      }
      std::map<std::string, int> env;
      bool fv = eval_fo(f, interp, env);
      env.clear();
      bool gv = eval_fo(g, interp, env);
      if (fv != gv) {
        BoundedResult r;
        r.equivalent = false;
        r.bound = n;
        r.counter_model = to_counter_model(interp, fv);
        return r;
      }
    }
  }
  BoundedResult r;
  r.equivalent = true;
  r.bound = max_domain;
  return r;
}

}  // namespace pip::eg
