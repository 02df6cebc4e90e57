#include "pip/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pip/errors.hpp"

namespace pip::detect {

namespace {

void validate_box(const Box& b, size_t line_no) {
  if (b.w <= 0 || b.h <= 0)
    throw ValidationError("box on line " + std::to_string(line_no) +
                          " has non-positive width or height");
  if (b.x < 0 || b.y < 0)
    throw ValidationError("box on line " + std::to_string(line_no) +
                          " has negative coordinates");
  if (b.confidence && (*b.confidence < 0 || *b.confidence > 1))
    throw ValidationError("box on line " + std::to_string(line_no) +
                          " has confidence outside [0,1]");
}

}  // namespace

std::vector<Box> parse_boxes(const std::string& jsonl) {
  std::vector<Box> out;
  std::istringstream in(jsonl);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("detection file line " + std::to_string(line_no) +
                       ": " + e.what());
    }
    Box b;
    b.page_id = j.at("page_id").get<std::string>();
    b.class_name = j.at("class").get<std::string>();
    b.x = j.at("x").get<double>();
    b.y = j.at("y").get<double>();
    b.w = j.at("w").get<double>();
    b.h = j.at("h").get<double>();
    if (j.contains("confidence") && !j["confidence"].is_null())
      b.confidence = j["confidence"].get<double>();
    validate_box(b, line_no);
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<Box> load_boxes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open detection file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_boxes(buf.str());
}

double iou(const Box& a, const Box& b) {
  double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  double inter = ix * iy;
  double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

MatchResult match_detections(const std::vector<Box>& preds,
                             const std::vector<Box>& gts,
                             double iou_threshold) {
  std::vector<size_t> order(preds.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return preds[a].confidence.value_or(0) > preds[b].confidence.value_or(0);
  });

  MatchResult result;
  std::vector<bool> claimed(gts.size(), false);
  for (size_t idx : order) {
    const Box& p = preds[idx];
    double best_iou = 0;
    size_t best_gt = gts.size();
    for (size_t g = 0; g < gts.size(); ++g) {
      if (claimed[g] || gts[g].page_id != p.page_id ||
          gts[g].class_name != p.class_name)
        continue;
      double v = iou(p, gts[g]);
      if (v > best_iou) {  // strict: IoU ties keep the lowest GT index
        best_iou = v;
        best_gt = g;
      }
    }
    bool tp = best_gt < gts.size() && best_iou >= iou_threshold;
    if (tp) claimed[best_gt] = true;
    result.flags.emplace_back(idx, tp);
  }
  result.fn = gts.size() - static_cast<size_t>(std::count(
                               claimed.begin(), claimed.end(), true));
  return result;
}

namespace {

double ap_from_curve(const std::vector<PrPoint>& curve) {
  // Area under the precision envelope over recall, all-points interpolation.
  double ap = 0;
  double prev_recall = 0;
  for (size_t i = 0; i < curve.size(); ++i) {
    double r = curve[i].recall;
    if (r <= prev_recall) continue;
    double envelope = 0;
    for (size_t j = i; j < curve.size(); ++j)
      if (curve[j].recall >= r) envelope = std::max(envelope, curve[j].precision);
    ap += (r - prev_recall) * envelope;
    prev_recall = r;
  }
  return ap;
}

std::vector<Box> filter_class(const std::vector<Box>& boxes,
                              const std::string& class_name) {
  std::vector<Box> out;
  for (const auto& b : boxes)
    if (b.class_name == class_name) out.push_back(b);
  return out;
}

}  // namespace

ApResult average_precision(const std::vector<Box>& preds,
                           const std::vector<Box>& gts,
                           const std::string& class_name,
                           double iou_threshold) {
  auto cls_preds = filter_class(preds, class_name);
  auto cls_gts = filter_class(gts, class_name);
  ApResult result;
  if (cls_gts.empty()) return result;  // AP undefined without ground truth

  auto match = match_detections(cls_preds, cls_gts, iou_threshold);
  long tp = 0, fp = 0;
  const double total_gt = static_cast<double>(cls_gts.size());
  for (const auto& [idx, is_tp] : match.flags) {
    if (is_tp)
      ++tp;
    else
      ++fp;
    PrPoint pt;
    pt.precision = static_cast<double>(tp) / (tp + fp);
    pt.recall = static_cast<double>(tp) / total_gt;
    pt.confidence = cls_preds[idx].confidence.value_or(0);
    result.curve.push_back(pt);
  }
  result.ap = ap_from_curve(result.curve);
  return result;
}

namespace {

struct SweepPoint {
  double threshold;
  long tp, fp, fn;
  double precision, recall, f1;
};

// F1 at every distinct confidence cutoff over pre-matched flags.
std::vector<SweepPoint> threshold_sweep(
    const std::vector<std::pair<double, bool>>& conf_flags, size_t total_gt) {
  std::vector<std::pair<double, bool>> sorted = conf_flags;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<SweepPoint> out;
  long tp = 0, fp = 0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].second)
      ++tp;
    else
      ++fp;
    // Emit a point only at the last prediction of each confidence value.
    if (i + 1 < sorted.size() && sorted[i + 1].first == sorted[i].first)
      continue;
    SweepPoint pt;
    pt.threshold = sorted[i].first;
    pt.tp = tp;
    pt.fp = fp;
    pt.fn = static_cast<long>(total_gt) - tp;
    pt.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    pt.recall = total_gt > 0 ? static_cast<double>(tp) / total_gt : 0.0;
    pt.f1 = (pt.precision + pt.recall) > 0
                ? 2 * pt.precision * pt.recall / (pt.precision + pt.recall)
                : 0.0;
    out.push_back(pt);
  }
  return out;
}

SweepPoint counts_at_threshold(
    const std::vector<std::pair<double, bool>>& conf_flags, size_t total_gt,
    double threshold) {
  SweepPoint pt{};
  pt.threshold = threshold;
  for (const auto& [conf, is_tp] : conf_flags) {
    if (conf < threshold) continue;
    if (is_tp)
      ++pt.tp;
    else
      ++pt.fp;
  }
  pt.fn = static_cast<long>(total_gt) - pt.tp;
  pt.precision = (pt.tp + pt.fp) > 0
                     ? static_cast<double>(pt.tp) / (pt.tp + pt.fp)
                     : 0.0;
  pt.recall = total_gt > 0 ? static_cast<double>(pt.tp) / total_gt : 0.0;
  pt.f1 = (pt.precision + pt.recall) > 0
              ? 2 * pt.precision * pt.recall / (pt.precision + pt.recall)
              : 0.0;
  return pt;
}

}  // namespace

DetectionReport evaluate_dataset(const std::vector<Box>& preds,
                                 const std::vector<Box>& gts,
                                 const std::vector<std::string>& classes,
                                 double iou_threshold,
                                 std::optional<double> report_threshold) {
  for (const auto& p : preds)
    if (!p.is_prediction())
      throw ValidationError("prediction box without confidence: page " +
                            p.page_id);
  DetectionReport report;
  double ap_sum = 0;
  int ap_count = 0;
  std::vector<std::pair<double, bool>> merged;  // (confidence, is TP)
  std::map<std::string, std::vector<std::pair<double, bool>>> per_class_flags;
  size_t total_gt = 0;

  for (const auto& cls : classes) {
    auto cls_preds = filter_class(preds, cls);
    auto cls_gts = filter_class(gts, cls);
    total_gt += cls_gts.size();
    auto match = match_detections(cls_preds, cls_gts, iou_threshold);
    auto& flags = per_class_flags[cls];
    for (const auto& [idx, is_tp] : match.flags) {
      double conf = cls_preds[idx].confidence.value_or(0);
      flags.emplace_back(conf, is_tp);
      merged.emplace_back(conf, is_tp);
    }

    ClassReport cr;
    cr.class_name = cls;
    auto ap = average_precision(preds, gts, cls, iou_threshold);
    cr.ap = ap.ap;
    cr.curve = ap.curve;
    if (cr.ap) {
      ap_sum += *cr.ap;
      ++ap_count;
    }
    auto sweep = threshold_sweep(flags, cls_gts.size());
    for (const auto& pt : sweep) {
      if (pt.f1 > cr.best_f1) {
        cr.best_f1 = pt.f1;
        cr.best_f1_threshold = pt.threshold;
        cr.precision_at_best_f1 = pt.precision;
        cr.recall_at_best_f1 = pt.recall;
      }
    }
    report.per_class.push_back(std::move(cr));
  }

  if (ap_count > 0) report.map = ap_sum / ap_count;

  auto merged_sweep = threshold_sweep(merged, total_gt);
  for (const auto& pt : merged_sweep) {
    if (pt.f1 > report.best_f1) {
      report.best_f1 = pt.f1;
      report.best_f1_threshold = pt.threshold;
      report.precision_at_best_f1 = pt.precision;
      report.recall_at_best_f1 = pt.recall;
    }
  }

  // Table-style confusion counts are threshold-dependent; the threshold is
  // explicit in the report rather than implied.
  report.report_threshold = report_threshold.value_or(report.best_f1_threshold);
  auto overall = counts_at_threshold(merged, total_gt, report.report_threshold);
  report.tp = overall.tp;
  report.fp = overall.fp;
  report.fn = overall.fn;
  for (auto& cr : report.per_class) {
    size_t cls_gt = filter_class(gts, cr.class_name).size();
    auto pt = counts_at_threshold(per_class_flags[cr.class_name], cls_gt,
                                  report.report_threshold);
    cr.tp = pt.tp;
    cr.fp = pt.fp;
    cr.fn = pt.fn;
  }
  return report;
}

}  // namespace pip::detect
