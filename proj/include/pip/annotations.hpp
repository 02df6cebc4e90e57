#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pip/corpus.hpp"
#include "pip/detect.hpp"

namespace pip::anno {

enum class Level { Morphological, Indexical, Symbolic };

std::string level_class(Level level);  // e.g. "pip:SymbolicLevel"
Level level_from_class(const std::string& cls);
std::string level_name(Level level);
Level level_from_name(const std::string& name);

struct XywhBox {
  long x = 0, y = 0, w = 0, h = 0;
};

struct Provenance {
  std::string model_name;
  std::string prompt_id;
  std::string timestamp;  // ISO-8601, supplied by the caller
  std::string generator;  // software agent identifier
};

struct WebAnnotation {
  std::string id;
  std::string motivation;  // "tagging" for regions, "describing" for interpretations
  std::string target_canvas;
  std::optional<XywhBox> target_box;
  std::string body_value;  // region class tag or interpretation text
  std::string anchor_uri;  // full page, via mlao:isAnchoredTo
  std::optional<Level> level;
  std::optional<Provenance> provenance;
  // Canvas dimensions recorded at construction time; used for bounds checks.
  int canvas_width = 0;
  int canvas_height = 0;
};

struct AnnotationPage {
  std::string id;
  std::vector<WebAnnotation> items;
};

// Namespace IRIs used in the JSON-LD context and RDF export. The pip: IRI is
// a placeholder default; the ontology has no published namespace yet.
struct Namespaces {
  std::string mlao = "https://w3id.org/mlao/";
  std::string hico = "https://w3id.org/hico/";
  std::string prov = "http://www.w3.org/ns/prov#";
  std::string pip = "https://example.org/pip/";
};

// Rounds the detection to an integer region covering it (floor x,y; ceil
// w,h), checks canvas bounds, and builds a tagging annotation whose anchor is
// the full page.
WebAnnotation detection_to_annotation(const detect::Box& det,
                                      const corpus::CanvasRecord& canvas,
                                      const std::string& id_base,
                                      int index = 0);

// Derives a describing annotation that shares the region target and anchor.
WebAnnotation attach_interpretation(const WebAnnotation& region_annotation,
                                    Level level, const std::string& text,
                                    const Provenance& provenance);

// Deterministic JSON-LD: items in input order, fixed key order, WADM context
// plus mlao/hico/prov/pip prefixes.
std::string build_annotation_page(const std::vector<WebAnnotation>& annotations,
                                  const std::string& page_uri,
                                  const Namespaces& ns = {});

AnnotationPage parse_annotation_page(const std::string& jsonld);

// Attaches the page to every canvas it targets ("annotations" list). A page
// with the same id replaces the previous copy.
std::string embed_in_manifest(const std::string& manifest_json,
                              const AnnotationPage& page,
                              const Namespaces& ns = {});

}  // namespace pip::anno
