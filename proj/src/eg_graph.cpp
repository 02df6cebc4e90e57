#include "pip/eg.hpp"

#include <cctype>
#include <set>

#include "pip/errors.hpp"

namespace pip::eg {

namespace {

struct SexpParser {
  const std::string& src;
  size_t pos = 0;

  explicit SexpParser(const std::string& s) : src(s) {}

  void skip_ws() {
    for (;;) {
      while (pos < src.size() &&
             std::isspace(static_cast<unsigned char>(src[pos])))
        ++pos;
      if (pos < src.size() && src[pos] == ';') {
        while (pos < src.size() && src[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
  }

  [[noreturn]] void fail(const std::string& what) {
    throw ParseError("EG parse error at position " + std::to_string(pos) +
                     ": " + what);
  }

  void expect(char c) {
    skip_ws();
    if (pos >= src.size() || src[pos] != c)
      fail(std::string("expected '") + c + "'");
    ++pos;
  }

  std::string word() {
    skip_ws();
    size_t start = pos;
    while (pos < src.size() && src[pos] != '(' && src[pos] != ')' &&
           src[pos] != ';' &&
           !std::isspace(static_cast<unsigned char>(src[pos])))
      ++pos;
    if (pos == start) fail("expected a name");
    return src.substr(start, pos - start);
  }

  bool at(char c) {
    skip_ws();
    return pos < src.size() && src[pos] == c;
  }

  Area area_body() {
    Area area;
    while (!at(')')) {
      if (pos >= src.size()) fail("unbalanced parentheses");
      expect('(');
      std::string head = word();
      if (head == "lig") {
        area.entries.emplace_back(Ligature{word()});
      } else if (head == "spot") {
        Spot spot;
        spot.predicate = word();
        while (!at(')')) spot.hooks.push_back(word());
        area.entries.emplace_back(std::move(spot));
      } else if (head == "cut") {
        Cut cut;
        cut.area = std::make_unique<Area>(area_body());
        area.entries.emplace_back(std::move(cut));
      } else {
        fail("unknown entry kind '" + head + "'");
      }
      expect(')');
    }
    return area;
  }
};

struct Validator {
  std::set<std::string> declared_anywhere;
  std::set<std::string> referenced;

  void walk(const Area& area, std::set<std::string> in_scope) {
    for (const auto& entry : area.entries) {
      if (const auto* lig = std::get_if<Ligature>(&entry)) {
        if (!declared_anywhere.insert(lig->name).second)
          throw ValidationError("ligature '" + lig->name +
                                "' declared more than once");
        in_scope.insert(lig->name);
      } else if (const auto* spot = std::get_if<Spot>(&entry)) {
        for (const auto& hook : spot->hooks) {
          if (!in_scope.count(hook))
            throw ValidationError("hook references undeclared ligature '" +
                                  hook + "'");
          referenced.insert(hook);
        }
      } else if (const auto* cut = std::get_if<Cut>(&entry)) {
        walk(*cut->area, in_scope);
      }
    }
  }
};

}  // namespace

EGraph parse_eg(const std::string& text) {
  SexpParser p(text);
  p.expect('(');
  std::string head = p.word();
  if (head != "sheet") p.fail("graph must start with '(sheet'");
  EGraph graph{p.area_body()};
  p.expect(')');
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing content after graph");

  Validator v;
  v.walk(graph.sheet, {});
  for (const auto& name : v.declared_anywhere) {
    if (!v.referenced.count(name))
      throw ValidationError("dangling ligature '" + name +
                            "' is never referenced by a hook");
  }
  return graph;
}

namespace {

Formula translate_area(const Area& area) {
  std::vector<std::string> ligatures;
  std::vector<Formula> conjuncts;
  for (const auto& entry : area.entries) {
    if (const auto* lig = std::get_if<Ligature>(&entry))
      ligatures.push_back(lig->name);
    else if (const auto* spot = std::get_if<Spot>(&entry))
      conjuncts.push_back(mk_atom(spot->predicate, spot->hooks));
  }
  for (const auto& entry : area.entries) {
    if (const auto* cut = std::get_if<Cut>(&entry))
      conjuncts.push_back(mk_not(translate_area(*cut->area)));
  }
  Formula body = mk_conjunction(conjuncts);
  // Innermost quantifier corresponds to the last declaration.
  for (auto it = ligatures.rbegin(); it != ligatures.rend(); ++it)
    body = mk_exists(*it, body);
  return body;
}

}  // namespace

Formula eg_to_formula(const EGraph& graph) { return translate_area(graph.sheet); }

}  // namespace pip::eg
