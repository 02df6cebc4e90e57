#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pip/annotations.hpp"

namespace pip::kg {

struct Term {
  enum class Kind { Iri, Blank, Literal };
  Kind kind = Kind::Iri;
  std::string value;     // IRI, blank-node label (without "_:") or lexical form
  std::string datatype;  // literal datatype IRI, empty for plain
  std::string lang;      // literal language tag

  static Term iri(std::string v);
  static Term blank(std::string label);
  static Term literal(std::string v, std::string datatype = "",
                      std::string lang = "");

  bool operator==(const Term&) const = default;
  auto operator<=>(const Term&) const = default;
};

struct Triple {
  Term subject;    // Iri or Blank
  std::string predicate;  // always an IRI
  Term object;

  bool operator==(const Triple&) const = default;
  auto operator<=>(const Triple&) const = default;
};

struct TripleSet {
  std::set<Triple> triples;
  std::map<std::string, std::string> prefixes;  // prefix -> namespace IRI

  void add(Term subject, std::string predicate, Term object);
};

TripleSet make_triple_set(const anno::Namespaces& ns = {});

// Documented conversion pattern sizes (see annotations_to_triples):
//   tagging annotation: type, motivation, body literal, target structure x3,
//   selector x2, anchor = 9 triples.
//   interpretation annotation: type, motivation, body link, body type/value,
//   level type, target x3, selector x2, anchor, act type, body->act link,
//   agent, used prompt, end time = 17 triples (+1 when a generator is set).
inline constexpr int kTaggingPatternCount = 9;
inline constexpr int kInterpretationPatternCount = 17;

TripleSet annotations_to_triples(const anno::AnnotationPage& page,
                                 const anno::Namespaces& ns = {});

enum class RdfFormat { Turtle, NTriples };

// Deterministic: triples sorted by canonical (subject, predicate, object)
// strings. N-Triples emits exactly one line per triple; Turtle groups by
// subject with sorted predicates and uses the prefix table.
std::string serialize(const TripleSet& ts, RdfFormat format);

// Parses this module's own Turtle/N-Triples output (and plain N-Triples).
TripleSet parse_rdf(const std::string& text);

struct ValidationReport {
  std::vector<std::string> violations;  // each names the offending subject
  bool ok() const { return violations.empty(); }
};

// Shape checks: every oa:Annotation has >= 1 target and exactly 1 body;
// every level-typed interpretation body is generated by exactly one
// hico:InterpretationAct; every annotation has an mlao anchor.
ValidationReport validate_graph(const TripleSet& ts);

}  // namespace pip::kg
