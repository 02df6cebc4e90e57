#include "pip/kg.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <sstream>

#include "pip/errors.hpp"

namespace pip::kg {

namespace {

constexpr const char* kRdf = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
constexpr const char* kOa = "http://www.w3.org/ns/oa#";
constexpr const char* kDcterms = "http://purl.org/dc/terms/";
constexpr const char* kXsd = "http://www.w3.org/2001/XMLSchema#";

std::string fnv1a_hex(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

Term Term::iri(std::string v) {
  Term t;
  t.kind = Kind::Iri;
  t.value = std::move(v);
  return t;
}

Term Term::blank(std::string label) {
  Term t;
  t.kind = Kind::Blank;
  t.value = std::move(label);
  return t;
}

Term Term::literal(std::string v, std::string datatype, std::string lang) {
  Term t;
  t.kind = Kind::Literal;
  t.value = std::move(v);
  t.datatype = std::move(datatype);
  t.lang = std::move(lang);
  return t;
}

void TripleSet::add(Term subject, std::string predicate, Term object) {
  if (subject.kind == Term::Kind::Literal)
    throw ValidationError("literal in subject position");
  triples.insert(Triple{std::move(subject), std::move(predicate),
                        std::move(object)});
}

TripleSet make_triple_set(const anno::Namespaces& ns) {
  TripleSet ts;
  ts.prefixes = {{"rdf", kRdf},     {"oa", kOa},       {"dcterms", kDcterms},
                 {"xsd", kXsd},     {"prov", ns.prov}, {"hico", ns.hico},
                 {"mlao", ns.mlao}, {"pip", ns.pip}};
  return ts;
}

TripleSet annotations_to_triples(const anno::AnnotationPage& page,
                                 const anno::Namespaces& ns) {
  if (page.items.empty())
    throw ValidationError("annotation page has no annotations to convert");
  TripleSet ts = make_triple_set(ns);
  const std::string rdf_type = std::string(kRdf) + "type";
  const std::string rdf_value = std::string(kRdf) + "value";

  for (const auto& a : page.items) {
    if (a.target_canvas.empty())
      throw ValidationError("annotation '" + a.id + "' has no target");
    Term ann = Term::iri(a.id);
    std::string hash = fnv1a_hex(a.id);
    Term target_node = Term::blank("b_" + hash + "_target");
    Term selector_node = Term::blank("b_" + hash + "_selector");

    ts.add(ann, rdf_type, Term::iri(std::string(kOa) + "Annotation"));
    ts.add(ann, std::string(kOa) + "motivatedBy",
           Term::iri(std::string(kOa) + a.motivation));
    ts.add(ann, std::string(kOa) + "hasTarget", target_node);
    ts.add(target_node, std::string(kOa) + "hasSource",
           Term::iri(a.target_canvas));
    if (a.target_box) {
      ts.add(target_node, std::string(kOa) + "hasSelector", selector_node);
      ts.add(selector_node, rdf_type,
             Term::iri(std::string(kOa) + "FragmentSelector"));
      std::string xywh = "xywh=" + std::to_string(a.target_box->x) + "," +
                         std::to_string(a.target_box->y) + "," +
                         std::to_string(a.target_box->w) + "," +
                         std::to_string(a.target_box->h);
      ts.add(selector_node, rdf_value, Term::literal(xywh));
    }
    ts.add(ann, ns.mlao + "isAnchoredTo", Term::iri(a.anchor_uri));

    if (!a.level) {
      // Region tag: the body is a plain literal.
      ts.add(ann, std::string(kOa) + "hasBody", Term::literal(a.body_value));
      continue;
    }

    // Interpretation: a typed TextualBody generated by an interpretation act.
    Term body_node = Term::blank("b_" + hash + "_body");
    Term act_node = Term::blank("b_" + hash + "_act");
    ts.add(ann, std::string(kOa) + "hasBody", body_node);
    ts.add(body_node, rdf_type, Term::iri(std::string(kOa) + "TextualBody"));
    ts.add(body_node, rdf_value, Term::literal(a.body_value));
    std::string level_local = anno::level_name(*a.level) + "Level";
    ts.add(body_node, rdf_type, Term::iri(ns.pip + level_local));
    ts.add(act_node, rdf_type, Term::iri(ns.hico + "InterpretationAct"));
    ts.add(body_node, ns.prov + "wasGeneratedBy", act_node);
    if (a.provenance) {
      ts.add(act_node, ns.prov + "wasAssociatedWith",
             Term::literal(a.provenance->model_name));
      ts.add(act_node, ns.prov + "used",
             Term::literal(a.provenance->prompt_id));
      ts.add(act_node, ns.prov + "endedAtTime",
             Term::literal(a.provenance->timestamp,
                           std::string(kXsd) + "dateTime"));
      if (!a.provenance->generator.empty())
        ts.add(act_node, ns.prov + "softwareAgent",
               Term::literal(a.provenance->generator));
    }
  }
  return ts;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

std::string escape_literal(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\':
        out += "\\\\";
        break;
      case '"':
        out += "\\\"";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\r':
        out += "\\r";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string term_ntriples(const Term& t) {
  switch (t.kind) {
    case Term::Kind::Iri:
      return "<" + t.value + ">";
    case Term::Kind::Blank:
      return "_:" + t.value;
    case Term::Kind::Literal: {
      std::string out = "\"" + escape_literal(t.value) + "\"";
      if (!t.lang.empty())
        out += "@" + t.lang;
      else if (!t.datatype.empty())
        out += "^^<" + t.datatype + ">";
      return out;
    }
  }
  return {};
}

// Abbreviates an IRI through the prefix table when possible.
std::string iri_turtle(const std::string& iri,
                       const std::map<std::string, std::string>& prefixes) {
  for (const auto& [prefix, ns] : prefixes) {
    if (iri.rfind(ns, 0) != 0) continue;
    std::string local = iri.substr(ns.size());
    if (local.empty()) continue;
    if (local.find_first_of("/#:?") != std::string::npos) continue;
    return prefix + ":" + local;
  }
  return "<" + iri + ">";
}

std::string term_turtle(const Term& t,
                        const std::map<std::string, std::string>& prefixes) {
  switch (t.kind) {
    case Term::Kind::Iri:
      return iri_turtle(t.value, prefixes);
    case Term::Kind::Blank:
      return "_:" + t.value;
    case Term::Kind::Literal: {
      std::string out = "\"" + escape_literal(t.value) + "\"";
      if (!t.lang.empty())
        out += "@" + t.lang;
      else if (!t.datatype.empty())
        out += "^^" + iri_turtle(t.datatype, prefixes);
      return out;
    }
  }
  return {};
}

std::vector<Triple> sorted_triples(const TripleSet& ts) {
  std::vector<Triple> sorted(ts.triples.begin(), ts.triples.end());
  std::sort(sorted.begin(), sorted.end(), [](const Triple& a, const Triple& b) {
    auto key = [](const Triple& t) {
      return term_ntriples(t.subject) + " <" + t.predicate + "> " +
             term_ntriples(t.object);
    };
    return key(a) < key(b);
  });
  return sorted;
}

}  // namespace

std::string serialize(const TripleSet& ts, RdfFormat format) {
  // Distinct prefixes must not share a namespace IRI.
  std::map<std::string, std::string> seen;
  for (const auto& [prefix, ns] : ts.prefixes) {
    auto [it, inserted] = seen.emplace(ns, prefix);
    if (!inserted)
      throw ValidationError("prefix collision: '" + prefix + "' and '" +
                            it->second + "' both map to " + ns);
  }

  auto sorted = sorted_triples(ts);
  std::ostringstream os;
  if (format == RdfFormat::NTriples) {
    for (const auto& t : sorted)
      os << term_ntriples(t.subject) << " <" << t.predicate << "> "
         << term_ntriples(t.object) << " .\n";
    return os.str();
  }

  for (const auto& [prefix, ns] : ts.prefixes)
    os << "@prefix " << prefix << ": <" << ns << "> .\n";
  os << "\n";
  size_t i = 0;
  while (i < sorted.size()) {
    const Term& subject = sorted[i].subject;
    os << term_turtle(subject, ts.prefixes);
    bool first = true;
    while (i < sorted.size() && sorted[i].subject == subject) {
      os << (first ? " " : " ;\n    ");
      first = false;
      os << iri_turtle(sorted[i].predicate, ts.prefixes) << " "
         << term_turtle(sorted[i].object, ts.prefixes);
      ++i;
    }
    os << " .\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Parsing (own-output subset)
// ---------------------------------------------------------------------------

namespace {

struct RdfParser {
  const std::string& src;
  size_t pos = 0;
  std::map<std::string, std::string> prefixes;

  explicit RdfParser(const std::string& s) : src(s) {}

  void skip_ws() {
    while (pos < src.size() &&
           std::isspace(static_cast<unsigned char>(src[pos])))
      ++pos;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw ParseError("RDF parse error at position " + std::to_string(pos) +
                     ": " + what);
  }

  bool at_end() {
    skip_ws();
    return pos >= src.size();
  }

  std::string read_iri() {
    if (src[pos] != '<') fail("expected '<'");
    size_t end = src.find('>', pos);
    if (end == std::string::npos) fail("unterminated IRI");
    std::string iri = src.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    return iri;
  }

  std::string read_until_ws() {
    size_t start = pos;
    while (pos < src.size() &&
           !std::isspace(static_cast<unsigned char>(src[pos])) &&
           src[pos] != ';' && src[pos] != '.')
      ++pos;
    return src.substr(start, pos - start);
  }

  std::string expand_prefixed(const std::string& name) {
    size_t colon = name.find(':');
    if (colon == std::string::npos) fail("expected a prefixed name");
    std::string prefix = name.substr(0, colon);
    auto it = prefixes.find(prefix);
    if (it == prefixes.end()) fail("unknown prefix '" + prefix + "'");
    return it->second + name.substr(colon + 1);
  }

  Term read_term() {
    skip_ws();
    if (pos >= src.size()) fail("unexpected end of input");
    char c = src[pos];
    if (c == '<') return Term::iri(read_iri());
    if (c == '_') {
      if (src.compare(pos, 2, "_:") != 0) fail("expected blank node");
      pos += 2;
      return Term::blank(read_until_ws());
    }
    if (c == '"') {
      ++pos;
      std::string value;
      while (pos < src.size() && src[pos] != '"') {
        if (src[pos] == '\\' && pos + 1 < src.size()) {
          char e = src[pos + 1];
          value += e == 'n' ? '\n' : e == 'r' ? '\r' : e == 't' ? '\t' : e;
          pos += 2;
        } else {
          value += src[pos++];
        }
      }
      if (pos >= src.size()) fail("unterminated literal");
      ++pos;
      std::string datatype, lang;
      if (pos + 1 < src.size() && src[pos] == '^' && src[pos + 1] == '^') {
        pos += 2;
        if (pos < src.size() && src[pos] == '<')
          datatype = read_iri();
        else
          datatype = expand_prefixed(read_until_ws());
      } else if (pos < src.size() && src[pos] == '@') {
        ++pos;
        lang = read_until_ws();
      }
      return Term::literal(value, datatype, lang);
    }
    return Term::iri(expand_prefixed(read_until_ws()));
  }
};

}  // namespace

TripleSet parse_rdf(const std::string& text) {
  TripleSet ts;
  RdfParser p(text);
  while (!p.at_end()) {
    if (p.src.compare(p.pos, 7, "@prefix") == 0) {
      p.pos += 7;
      p.skip_ws();
      std::string prefix = p.read_until_ws();
      if (prefix.empty() || prefix.back() != ':') p.fail("malformed @prefix");
      prefix.pop_back();
      p.skip_ws();
      std::string ns = p.read_iri();
      p.skip_ws();
      if (p.pos >= p.src.size() || p.src[p.pos] != '.')
        p.fail("@prefix must end with '.'");
      ++p.pos;
      p.prefixes[prefix] = ns;
      ts.prefixes[prefix] = ns;
      continue;
    }
    Term subject = p.read_term();
    for (;;) {
      Term pred = p.read_term();
      if (pred.kind != Term::Kind::Iri) p.fail("predicate must be an IRI");
      Term object = p.read_term();
      ts.add(subject, pred.value, object);
      p.skip_ws();
      if (p.pos < p.src.size() && p.src[p.pos] == ';') {
        ++p.pos;
        continue;
      }
      if (p.pos < p.src.size() && p.src[p.pos] == '.') {
        ++p.pos;
        break;
      }
      p.fail("expected ';' or '.'");
    }
  }
  return ts;
}

// ---------------------------------------------------------------------------
// Shape validation
// ---------------------------------------------------------------------------

ValidationReport validate_graph(const TripleSet& ts) {
  ValidationReport report;
  const std::string rdf_type = std::string(kRdf) + "type";
  const std::string oa_annotation = std::string(kOa) + "Annotation";
  const std::string oa_has_body = std::string(kOa) + "hasBody";
  const std::string oa_has_target = std::string(kOa) + "hasTarget";

  auto objects_of = [&](const Term& subject, const std::string& predicate) {
    std::vector<Term> out;
    for (const auto& t : ts.triples)
      if (t.subject == subject && t.predicate == predicate)
        out.push_back(t.object);
    return out;
  };
  auto has_type = [&](const Term& subject, const std::string& type_iri) {
    for (const auto& t : ts.triples)
      if (t.subject == subject && t.predicate == rdf_type &&
          t.object.kind == Term::Kind::Iri && t.object.value == type_iri)
        return true;
    return false;
  };
  auto subject_label = [](const Term& t) {
    return t.kind == Term::Kind::Blank ? "_:" + t.value : t.value;
  };

  std::set<Term> annotations;
  std::string mlao_anchor, hico_act, prov_generated_by, pip_ns;
  for (const auto& [prefix, ns] : ts.prefixes) {
    if (prefix == "mlao") mlao_anchor = ns + "isAnchoredTo";
    if (prefix == "hico") hico_act = ns + "InterpretationAct";
    if (prefix == "prov") prov_generated_by = ns + "wasGeneratedBy";
    if (prefix == "pip") pip_ns = ns;
  }

  for (const auto& t : ts.triples)
    if (t.predicate == rdf_type && t.object.kind == Term::Kind::Iri &&
        t.object.value == oa_annotation)
      annotations.insert(t.subject);

  for (const auto& ann : annotations) {
    if (objects_of(ann, oa_has_target).empty())
      report.violations.push_back("annotation " + subject_label(ann) +
                                  " has no target");
    size_t bodies = objects_of(ann, oa_has_body).size();
    if (bodies != 1)
      report.violations.push_back("annotation " + subject_label(ann) +
                                  " has " + std::to_string(bodies) +
                                  " bodies, expected 1");
    if (!mlao_anchor.empty() && objects_of(ann, mlao_anchor).empty())
      report.violations.push_back("annotation " + subject_label(ann) +
                                  " has no mlao anchor");
  }

  // Every level-typed interpretation body must be generated by exactly one
  // interpretation act.
  for (const auto& t : ts.triples) {
    if (t.predicate != rdf_type || t.object.kind != Term::Kind::Iri) continue;
    if (pip_ns.empty() || t.object.value.rfind(pip_ns, 0) != 0) continue;
    if (t.object.value.find("Level") == std::string::npos) continue;
    const Term& body = t.subject;
    auto acts = objects_of(body, prov_generated_by);
    size_t valid_acts = 0;
    for (const auto& act : acts)
      if (has_type(act, hico_act)) ++valid_acts;
    if (valid_acts != 1)
      report.violations.push_back(
          "interpretation body " + subject_label(body) + " is generated by " +
          std::to_string(valid_acts) + " interpretation acts, expected 1");
  }
  return report;
}

}  // namespace pip::kg
