#include "pip/annotations.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "pip/errors.hpp"

namespace pip::anno {

using ordered_json = nlohmann::ordered_json;

std::string level_class(Level level) {
  switch (level) {
    case Level::Morphological:
      return "pip:MorphologicalLevel";
    case Level::Indexical:
      return "pip:IndexicalLevel";
    case Level::Symbolic:
      return "pip:SymbolicLevel";
  }
  throw ValidationError("invalid level");
}

Level level_from_class(const std::string& cls) {
  if (cls == "pip:MorphologicalLevel") return Level::Morphological;
  if (cls == "pip:IndexicalLevel") return Level::Indexical;
  if (cls == "pip:SymbolicLevel") return Level::Symbolic;
  throw ParseError("unknown level class '" + cls + "'");
}

std::string level_name(Level level) {
  switch (level) {
    case Level::Morphological:
      return "Morphological";
    case Level::Indexical:
      return "Indexical";
    case Level::Symbolic:
      return "Symbolic";
  }
  throw ValidationError("invalid level");
}

Level level_from_name(const std::string& name) {
  if (name == "Morphological" || name == "morphological")
    return Level::Morphological;
  if (name == "Indexical" || name == "indexical") return Level::Indexical;
  if (name == "Symbolic" || name == "symbolic") return Level::Symbolic;
  throw ParseError("unknown level name '" + name + "'");
}

WebAnnotation detection_to_annotation(const detect::Box& det,
                                      const corpus::CanvasRecord& canvas,
                                      const std::string& id_base, int index) {
  WebAnnotation a;
  a.id = id_base + "/" + std::to_string(canvas.sequence_index) + "/" +
         std::to_string(index);
  a.motivation = "tagging";
  a.target_canvas = canvas.canvas_uri;
  XywhBox box;
  box.x = static_cast<long>(std::floor(det.x));
  box.y = static_cast<long>(std::floor(det.y));
  box.w = static_cast<long>(std::ceil(det.w));
  box.h = static_cast<long>(std::ceil(det.h));
  if (box.w <= 0 || box.h <= 0)
    throw ValidationError("detection rounds to an empty region");
  if (box.x + box.w > canvas.width_px || box.y + box.h > canvas.height_px ||
      box.x < 0 || box.y < 0)
    throw ValidationError("detection region out of canvas bounds after rounding");
  a.target_box = box;
  a.body_value = det.class_name;
  a.anchor_uri = canvas.canvas_uri;  // the full page is the conceptual anchor
  a.canvas_width = canvas.width_px;
  a.canvas_height = canvas.height_px;
  return a;
}

WebAnnotation attach_interpretation(const WebAnnotation& region_annotation,
                                    Level level, const std::string& text,
                                    const Provenance& provenance) {
  if (!region_annotation.target_box)
    throw ValidationError("interpretation requires a region-targeted annotation");
  if (text.empty()) throw ValidationError("interpretation text must not be empty");
  std::vector<std::string> missing;
  if (provenance.model_name.empty()) missing.push_back("model_name");
  if (provenance.prompt_id.empty()) missing.push_back("prompt_id");
  if (provenance.timestamp.empty()) missing.push_back("timestamp");
  if (!missing.empty()) {
    std::string msg = "provenance missing fields:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }
  WebAnnotation a = region_annotation;
  a.id = region_annotation.id + "/" + level_name(level);
  a.motivation = "describing";
  a.body_value = text;
  a.level = level;
  a.provenance = provenance;
  return a;
}

namespace {

std::string xywh_value(const XywhBox& box) {
  return "xywh=" + std::to_string(box.x) + "," + std::to_string(box.y) + "," +
         std::to_string(box.w) + "," + std::to_string(box.h);
}

XywhBox parse_xywh(const std::string& value) {
  if (value.rfind("xywh=", 0) != 0)
    throw ParseError("malformed selector value '" + value + "'");
  long vals[4];
  size_t pos = 5;
  for (int i = 0; i < 4; ++i) {
    size_t comma = i < 3 ? value.find(',', pos) : value.size();
    if (comma == std::string::npos)
      throw ParseError("malformed selector value '" + value + "'");
    try {
      vals[i] = std::stol(value.substr(pos, comma - pos));
    } catch (const std::exception&) {
      throw ParseError("malformed selector value '" + value + "'");
    }
    pos = comma + 1;
  }
  XywhBox box{vals[0], vals[1], vals[2], vals[3]};
  if (box.x < 0 || box.y < 0)
    throw ParseError("selector '" + value + "' has negative origin");
  if (box.w <= 0 || box.h <= 0)
    throw ParseError("selector '" + value + "' has non-positive size");
  return box;
}

ordered_json annotation_to_json(const WebAnnotation& a) {
  ordered_json j;
  j["id"] = a.id;
  j["type"] = "Annotation";
  j["motivation"] = a.motivation;
  if (a.level) {
    j["body"] = {{"type", ordered_json::array(
                              {"TextualBody", level_class(*a.level)})},
                 {"value", a.body_value}};
  } else {
    j["body"] = {{"type", "TextualBody"},
                 {"purpose", "tagging"},
                 {"value", a.body_value}};
  }
  ordered_json target;
  target["source"] = a.target_canvas;
  if (a.target_box) {
    target["selector"] = {{"type", "FragmentSelector"},
                          {"conformsTo", "http://www.w3.org/TR/media-frags/"},
                          {"value", xywh_value(*a.target_box)}};
  }
  if (a.canvas_width > 0) target["pip:sourceWidth"] = a.canvas_width;
  if (a.canvas_height > 0) target["pip:sourceHeight"] = a.canvas_height;
  j["target"] = std::move(target);
  j["mlao:isAnchoredTo"] = a.anchor_uri;
  if (a.provenance) {
    // PROV pattern: the interpretation act is the activity; the model is the
    // associated agent, the prompt the used entity.
    j["hico:interpretation"] = {
        {"type", "hico:InterpretationAct"},
        {"prov:wasAssociatedWith", a.provenance->model_name},
        {"prov:used", a.provenance->prompt_id},
        {"prov:endedAtTime", a.provenance->timestamp},
        {"prov:softwareAgent", a.provenance->generator}};
  }
  return j;
}

WebAnnotation annotation_from_json(const ordered_json& j) {
  WebAnnotation a;
  a.id = j.at("id").get<std::string>();
  a.motivation = j.at("motivation").get<std::string>();
  const auto& body = j.at("body");
  a.body_value = body.at("value").get<std::string>();
  const auto& btype = body.at("type");
  if (btype.is_array()) {
    for (const auto& t : btype) {
      std::string s = t.get<std::string>();
      if (s != "TextualBody") a.level = level_from_class(s);
    }
  }
  const auto& target = j.at("target");
  if (target.is_string()) {
    a.target_canvas = target.get<std::string>();
  } else {
    a.target_canvas = target.at("source").get<std::string>();
    if (target.contains("selector")) {
      const auto& sel = target.at("selector");
      std::string sel_type = sel.value("type", "");
      if (sel_type != "FragmentSelector")
        throw ParseError("unsupported selector type '" + sel_type + "'");
      a.target_box = parse_xywh(sel.at("value").get<std::string>());
    }
    a.canvas_width = target.value("pip:sourceWidth", 0);
    a.canvas_height = target.value("pip:sourceHeight", 0);
  }
  a.anchor_uri = j.value("mlao:isAnchoredTo", "");
  if (j.contains("hico:interpretation")) {
    const auto& act = j["hico:interpretation"];
    Provenance p;
    p.model_name = act.value("prov:wasAssociatedWith", "");
    p.prompt_id = act.value("prov:used", "");
    p.timestamp = act.value("prov:endedAtTime", "");
    p.generator = act.value("prov:softwareAgent", "");
    a.provenance = p;
  }
  return a;
}

ordered_json page_to_json(const std::vector<WebAnnotation>& annotations,
                          const std::string& page_uri, const Namespaces& ns) {
  if (annotations.empty())
    throw ValidationError("annotation page must not be empty");
  std::set<std::string> ids;
  for (const auto& a : annotations)
    if (!ids.insert(a.id).second)
      throw ValidationError("duplicate annotation id '" + a.id + "'");

  ordered_json page;
  page["@context"] = ordered_json::array(
      {"http://www.w3.org/ns/anno.jsonld",
       ordered_json{{"mlao", ns.mlao},
                    {"hico", ns.hico},
                    {"prov", ns.prov},
                    {"pip", ns.pip}}});
  page["id"] = page_uri;
  page["type"] = "AnnotationPage";
  page["items"] = ordered_json::array();
  for (const auto& a : annotations)
    page["items"].push_back(annotation_to_json(a));
  return page;
}

}  // namespace

std::string build_annotation_page(const std::vector<WebAnnotation>& annotations,
                                  const std::string& page_uri,
                                  const Namespaces& ns) {
  return page_to_json(annotations, page_uri, ns).dump(2);
}

AnnotationPage parse_annotation_page(const std::string& jsonld) {
  ordered_json j;
  try {
    j = ordered_json::parse(jsonld);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("annotation page: ") + e.what());
  }
  AnnotationPage page;
  page.id = j.at("id").get<std::string>();
  if (!j.contains("items") || !j["items"].is_array())
    throw ValidationError("annotation page lacks an items array");
  for (const auto& item : j["items"])
    page.items.push_back(annotation_from_json(item));
  std::set<std::string> ids;
  for (const auto& a : page.items)
    if (!ids.insert(a.id).second)
      throw ValidationError("duplicate annotation id '" + a.id + "'");
  return page;
}

std::string embed_in_manifest(const std::string& manifest_json,
                              const AnnotationPage& page,
                              const Namespaces& ns) {
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(manifest_json);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }

  std::string context;
  if (manifest.contains("@context") && manifest["@context"].is_string())
    context = manifest["@context"].get<std::string>();
  bool v3 = context.find("presentation/3") != std::string::npos;

  ordered_json* canvases = nullptr;
  if (v3 && manifest.contains("items")) {
    canvases = &manifest["items"];
  } else if (manifest.contains("sequences") && !manifest["sequences"].empty() &&
             manifest["sequences"].front().contains("canvases")) {
    canvases = &manifest["sequences"].front()["canvases"];
  } else {
    throw ValidationError("manifest has no canvases to annotate");
  }

  std::set<std::string> targets;
  for (const auto& a : page.items) targets.insert(a.target_canvas);

  ordered_json page_json = page_to_json(page.items, page.id, ns);
  std::set<std::string> found;
  for (auto& canvas : *canvases) {
    std::string uri = v3 ? canvas.value("id", "") : canvas.value("@id", "");
    if (!targets.count(uri)) continue;
    found.insert(uri);
    if (!canvas.contains("annotations") || !canvas["annotations"].is_array())
      canvas["annotations"] = ordered_json::array();
    auto& list = canvas["annotations"];
    // Re-embedding the same page replaces it.
    for (auto it = list.begin(); it != list.end();) {
      if (it->is_object() && it->value("id", "") == page.id)
        it = list.erase(it);
      else
        ++it;
    }
    list.push_back(page_json);
  }
  for (const auto& uri : targets)
    if (!found.count(uri))
      throw ValidationError("annotation page targets unknown canvas '" + uri +
                            "'");
  return manifest.dump(2);
}

}  // namespace pip::anno
