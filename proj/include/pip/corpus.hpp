#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pip::corpus {

struct CanvasRecord {
  std::string canvas_uri;
  std::string image_service_base;
  int width_px = 0;
  int height_px = 0;
  std::string label;
  int sequence_index = 0;
  std::string manifest_id;
  std::optional<char> robin_category;  // single-letter code, e.g. 'D'
  std::optional<int> year;
  bool is_blank = false;
};

struct ParseOptions {
  // A canvas is blank iff its lowercased label contains "blank" or this
  // regex (when set) matches the label.
  std::optional<std::string> blank_regex;
  // Manifest metadata key whose value carries the Robin classification; the
  // category is the first capital letter found in that value.
  std::string robin_metadata_key = "Classification";
  // Metadata key searched for a 4-digit year.
  std::string date_metadata_key = "Date";
};

// IIIF Presentation 2.x ("sequences/canvases") and 3.0 ("items"),
// auto-detected from @context. Returns one record per canvas in sequence
// order.
std::vector<CanvasRecord> parse_manifest(const std::string& manifest_json,
                                         const ParseOptions& options = {});

struct FilterResult {
  std::vector<CanvasRecord> kept;
  size_t removed_count = 0;
};

FilterResult filter_blank(const std::vector<CanvasRecord>& records);

struct Region {
  bool full = true;
  long x = 0, y = 0, w = 0, h = 0;
};

struct Size {
  bool full = true;
  long max_width = 0;
};

// IIIF Image API: {base}/{region}/{size}/0/default.jpg
std::string build_image_url(const CanvasRecord& record, const Region& region,
                            const Size& size);

// Parses the region segment of a URL built by build_image_url.
Region parse_region_segment(const std::string& segment);

struct CorpusStats {
  long total_items = 0;
  long digitized_items = 0;
  long total_pages = 0;
  long blank_removed = 0;
  long retained = 0;
  // (category or "unknown", 5-year period start or -1 for unknown) -> pages
  std::map<std::pair<std::string, int>, long> per_category_per_period;

  std::string to_csv() const;  // header: category,period_start,page_count
};

CorpusStats corpus_stats(const std::vector<CanvasRecord>& records,
                         long total_items = 0);

}  // namespace pip::corpus
