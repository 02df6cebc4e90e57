#include "pip/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pip/errors.hpp"

namespace pip::corpus {

namespace {

using nlohmann::json;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

// v3 labels are language maps; v2 labels may be strings, arrays, or
// {"@value": ...} objects.
std::string extract_label(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array() && !j.empty()) return extract_label(j.front());
  if (j.is_object()) {
    if (j.contains("@value")) return extract_label(j["@value"]);
    for (const auto& [lang, values] : j.items()) {
      (void)lang;
      return extract_label(values);
    }
  }
  return {};
}

std::optional<int> extract_year(const std::string& text) {
  static const std::regex four_digits("\\b(\\d{4})\\b");
  std::smatch m;
  if (std::regex_search(text, m, four_digits)) return std::stoi(m[1].str());
  return std::nullopt;
}

std::optional<char> extract_category(const std::string& text) {
  for (char c : text)
    if (c >= 'A' && c <= 'Z') return c;
  return std::nullopt;
}

// Looks up a metadata entry by label in either v2 or v3 metadata shape.
std::optional<std::string> metadata_value(const json& manifest,
                                          const std::string& key) {
  if (!manifest.contains("metadata") || !manifest["metadata"].is_array())
    return std::nullopt;
  std::string want = lower(key);
  for (const auto& entry : manifest["metadata"]) {
    if (!entry.is_object()) continue;
    std::string label = extract_label(entry.value("label", json()));
    if (lower(label).find(want) == std::string::npos) continue;
    return extract_label(entry.value("value", json()));
  }
  return std::nullopt;
}

bool matches_blank(const std::string& label, const ParseOptions& options) {
  if (lower(label).find("blank") != std::string::npos) return true;
  if (options.blank_regex) {
    std::regex re(*options.blank_regex);
    if (std::regex_search(label, re)) return true;
  }
  return false;
}

int require_dimension(const json& canvas, const char* key,
                      const std::string& canvas_uri) {
  if (!canvas.contains(key) || !canvas[key].is_number())
    throw ValidationError("canvas '" + canvas_uri + "' lacks " + key);
  int v = canvas[key].get<int>();
  if (v <= 0)
    throw ValidationError("canvas '" + canvas_uri + "' has non-positive " +
                          std::string(key));
  return v;
}

std::string find_service_base_v2(const json& canvas) {
  if (!canvas.contains("images")) return {};
  for (const auto& image : canvas["images"]) {
    const json* res = image.contains("resource") ? &image["resource"] : nullptr;
    if (!res) continue;
    if (res->contains("service")) {
      const auto& svc = (*res)["service"];
      if (svc.is_object() && svc.contains("@id"))
        return svc["@id"].get<std::string>();
      if (svc.is_array() && !svc.empty() && svc.front().contains("@id"))
        return svc.front()["@id"].get<std::string>();
    }
    if (res->contains("@id")) return (*res)["@id"].get<std::string>();
  }
  return {};
}

std::string find_service_base_v3(const json& canvas) {
  if (!canvas.contains("items")) return {};
  for (const auto& anno_page : canvas["items"]) {
    if (!anno_page.contains("items")) continue;
    for (const auto& anno : anno_page["items"]) {
      if (!anno.contains("body")) continue;
      const auto& body = anno["body"];
      if (body.contains("service")) {
        const auto& svc = body["service"];
        const json& first = svc.is_array() && !svc.empty() ? svc.front() : svc;
        if (first.contains("id")) return first["id"].get<std::string>();
        if (first.contains("@id")) return first["@id"].get<std::string>();
      }
      if (body.contains("id")) return body["id"].get<std::string>();
    }
  }
  return {};
}

}  // namespace

std::vector<CanvasRecord> parse_manifest(const std::string& manifest_json,
                                         const ParseOptions& options) {
  json manifest;
  try {
    manifest = json::parse(manifest_json);
  } catch (const json::parse_error& e) {
    throw ParseError("manifest JSON malformed at byte " +
                     std::to_string(e.byte) + ": " + e.what());
  }

  std::string context;
  if (manifest.contains("@context")) {
    const auto& ctx = manifest["@context"];
    if (ctx.is_string())
      context = ctx.get<std::string>();
    else if (ctx.is_array())
      for (const auto& c : ctx)
        if (c.is_string()) context += c.get<std::string>() + " ";
  }
  bool v3 = context.find("presentation/3") != std::string::npos;
  bool v2 = context.find("presentation/2") != std::string::npos;
  if (!v2 && !v3)
    throw ParseError(
        "unsupported or missing IIIF Presentation version in @context");

  std::string manifest_id =
      v3 ? manifest.value("id", "") : manifest.value("@id", "");
  auto category_text = metadata_value(manifest, options.robin_metadata_key);
  auto date_text = metadata_value(manifest, options.date_metadata_key);
  std::optional<char> category =
      category_text ? extract_category(*category_text) : std::nullopt;
  std::optional<int> year = date_text ? extract_year(*date_text) : std::nullopt;

  const json* canvases = nullptr;
  if (v3) {
    if (!manifest.contains("items"))
      throw ValidationError("manifest lacks the 'items' canvases array");
    canvases = &manifest["items"];
  } else {
    if (!manifest.contains("sequences") || manifest["sequences"].empty() ||
        !manifest["sequences"].front().contains("canvases"))
      throw ValidationError(
          "manifest lacks the 'sequences[0].canvases' array");
    canvases = &manifest["sequences"].front()["canvases"];
  }

  std::vector<CanvasRecord> records;
  std::set<std::string> seen_uris;
  int index = 0;
  for (const auto& canvas : *canvases) {
    CanvasRecord rec;
    rec.canvas_uri = v3 ? canvas.value("id", "") : canvas.value("@id", "");
    if (rec.canvas_uri.empty())
      throw ValidationError("canvas at index " + std::to_string(index) +
                            " lacks an id");
    if (!seen_uris.insert(rec.canvas_uri).second)
      throw ValidationError("duplicate canvas URI '" + rec.canvas_uri + "'");
    rec.width_px = require_dimension(canvas, "width", rec.canvas_uri);
    rec.height_px = require_dimension(canvas, "height", rec.canvas_uri);
    rec.label = extract_label(canvas.value("label", json()));
    rec.sequence_index = index++;
    rec.manifest_id = manifest_id;
    rec.image_service_base =
        v3 ? find_service_base_v3(canvas) : find_service_base_v2(canvas);
    rec.robin_category = category;
    rec.year = year;
    // Canvas-level metadata overrides the manifest-level values.
    if (auto canvas_date = metadata_value(canvas, options.date_metadata_key))
      if (auto y = extract_year(*canvas_date)) rec.year = y;
    rec.is_blank = matches_blank(rec.label, options);
    records.push_back(std::move(rec));
  }
  return records;
}

FilterResult filter_blank(const std::vector<CanvasRecord>& records) {
  FilterResult result;
  for (const auto& rec : records)
    if (!rec.is_blank) result.kept.push_back(rec);
  result.removed_count = records.size() - result.kept.size();
  return result;
}

std::string build_image_url(const CanvasRecord& record, const Region& region,
                            const Size& size) {
  std::string region_seg;
  if (region.full) {
    region_seg = "full";
  } else {
    if (region.x < 0 || region.y < 0 || region.w <= 0 || region.h <= 0)
      throw ValidationError("region box must have non-negative origin and positive size");
    if (region.x + region.w > record.width_px)
      throw ValidationError("region right edge " +
                            std::to_string(region.x + region.w) +
                            " exceeds canvas width " +
                            std::to_string(record.width_px));
    if (region.y + region.h > record.height_px)
      throw ValidationError("region bottom edge " +
                            std::to_string(region.y + region.h) +
                            " exceeds canvas height " +
                            std::to_string(record.height_px));
    region_seg = std::to_string(region.x) + "," + std::to_string(region.y) +
                 "," + std::to_string(region.w) + "," + std::to_string(region.h);
  }
  std::string size_seg =
      size.full ? "full" : std::to_string(size.max_width) + ",";
  return record.image_service_base + "/" + region_seg + "/" + size_seg +
         "/0/default.jpg";
}

Region parse_region_segment(const std::string& segment) {
  Region region;
  if (segment == "full") return region;
  region.full = false;
  long vals[4];
  size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    size_t comma = i < 3 ? segment.find(',', pos) : segment.size();
    if (comma == std::string::npos)
      throw ParseError("malformed region segment '" + segment + "'");
    vals[i] = std::stol(segment.substr(pos, comma - pos));
    pos = comma + 1;
  }
  region.x = vals[0];
  region.y = vals[1];
  region.w = vals[2];
  region.h = vals[3];
  return region;
}

CorpusStats corpus_stats(const std::vector<CanvasRecord>& records,
                         long total_items) {
  CorpusStats stats;
  stats.total_items = total_items;
  stats.total_pages = static_cast<long>(records.size());
  std::set<std::string> manifests;
  for (const auto& rec : records) {
    if (!rec.manifest_id.empty()) manifests.insert(rec.manifest_id);
    if (rec.is_blank) ++stats.blank_removed;
    std::string category =
        rec.robin_category ? std::string(1, *rec.robin_category) : "unknown";
    // Floor to the enclosing 5-year period; -1 marks an unknown year.
    int period = rec.year ? (*rec.year / 5) * 5 : -1;
    stats.per_category_per_period[{category, period}]++;
  }
  stats.digitized_items = static_cast<long>(manifests.size());
  stats.retained = stats.total_pages - stats.blank_removed;
  return stats;
}

std::string CorpusStats::to_csv() const {
  std::ostringstream os;
  os << "category,period_start,page_count\n";
  for (const auto& [key, count] : per_category_per_period) {
    os << key.first << ",";
    if (key.second < 0)
      os << "unknown";
    else
      os << key.second;
    os << "," << count << "\n";
  }
  return os.str();
}

}  // namespace pip::corpus
