#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pip::detect {

struct Box {
  std::string page_id;
  std::string class_name;  // "diagram" or "text_block"
  double x = 0, y = 0, w = 0, h = 0;
  std::optional<double> confidence;  // present iff this is a prediction

  bool is_prediction() const { return confidence.has_value(); }
};

// Detection JSONL: {"page_id": str, "class": str, "x":f,"y":f,"w":f,"h":f,
// "confidence": f|null}. Null confidence marks ground truth.
std::vector<Box> parse_boxes(const std::string& jsonl);
std::vector<Box> load_boxes(const std::string& path);

// Intersection over union; 0 when disjoint.
double iou(const Box& a, const Box& b);

struct MatchResult {
  // One flag per prediction, in descending-confidence order (ties by input
  // order); paired with the original input index.
  std::vector<std::pair<size_t, bool>> flags;  // (pred input index, is TP)
  size_t fn = 0;                               // unmatched ground-truth boxes
};

// Greedy matching: each prediction, highest confidence first, claims the
// unclaimed same-page same-class GT with maximal IoU >= threshold. IoU ties
// break toward the lowest GT index.
MatchResult match_detections(const std::vector<Box>& preds,
                             const std::vector<Box>& gts,
                             double iou_threshold = 0.5);

struct PrPoint {
  double precision = 0;
  double recall = 0;
  double confidence = 0;
};

struct ApResult {
  std::optional<double> ap;  // absent when the class has no GT boxes
  std::vector<PrPoint> curve;
};

// All-points interpolated AP (area under the precision envelope) for one
// class at the given IoU threshold.
ApResult average_precision(const std::vector<Box>& preds,
                           const std::vector<Box>& gts,
                           const std::string& class_name,
                           double iou_threshold = 0.5);

struct ClassReport {
  std::string class_name;
  std::optional<double> ap;
  double best_f1 = 0;
  double best_f1_threshold = 0;
  double precision_at_best_f1 = 0;
  double recall_at_best_f1 = 0;
  long tp = 0, fp = 0, fn = 0;  // counted at report_threshold
  std::vector<PrPoint> curve;
};

struct DetectionReport {
  std::vector<ClassReport> per_class;
  std::optional<double> map;  // mean of defined class APs
  double best_f1 = 0;         // over the merged (all-class) sweep
  double best_f1_threshold = 0;
  double precision_at_best_f1 = 0;
  double recall_at_best_f1 = 0;
  long tp = 0, fp = 0, fn = 0;
  double report_threshold = 0;
};

// Per-class AP and mAP; best-F1 threshold over the merged PR sweep. TP/FP/FN
// counts use report_threshold when given, otherwise the best-F1 threshold.
DetectionReport evaluate_dataset(const std::vector<Box>& preds,
                                 const std::vector<Box>& gts,
                                 const std::vector<std::string>& classes,
                                 double iou_threshold = 0.5,
                                 std::optional<double> report_threshold = {});

}  // namespace pip::detect
