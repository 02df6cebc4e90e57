#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pip::classifier {

inline constexpr int kNumClasses = 3;  // 0=cover, 1=text, 2=diagram_mixed
inline constexpr int kUnlabeled = -1;

struct LabeledFeature {
  std::string page_id;
  std::vector<double> vector;
  int label = kUnlabeled;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // row-major, height*width

  double at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

struct HogConfig {
  int resize_to = 256;
  int cell_size = 32;
  int block_cells = 2;  // 2x2 cells per block
  int num_bins = 9;     // unsigned orientations over [0, 180)
  double clip = 0.2;    // L2-hys clipping threshold
};

// Resize to resize_to², central-difference gradients, magnitude-weighted
// orientation histograms per cell, overlapping block L2-hys normalization,
// concatenated. Deterministic.
std::vector<double> hog_features(const GrayImage& image,
                                 const HogConfig& config = {});

// JSONL, one object per line:
//   {"page_id": str, "label": 0|1|2|null, "vector": [float,...]}
// All vectors must share one length and be finite.
std::vector<LabeledFeature> load_external_features(const std::string& path);
std::vector<LabeledFeature> parse_external_features(const std::string& jsonl);

struct Hyperparams {
  double learning_rate = 0.1;
  double l2 = 1e-4;
  int max_epochs = 2000;
  double tolerance = 1e-6;  // stop when gradient norm drops below this
  uint64_t seed = 0;
  bool standardize = false;  // optional feature standardization, default off
};

struct LogRegModel {
  std::vector<std::vector<double>> weights;  // num_classes x feature_dim
  std::vector<double> bias;                  // num_classes
  Hyperparams hyper;
  // Standardization parameters, identity when hyper.standardize is false.
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;

  std::string to_json() const;
  static LogRegModel from_json(const std::string& json_text);
};

// Multinomial softmax regression, cross-entropy + L2, full-batch gradient
// descent. Deterministic given (data order, seed, hyperparams). Every class
// in [0, kNumClasses) must have at least one sample.
LogRegModel train_logreg(const std::vector<LabeledFeature>& data,
                         const Hyperparams& hyper = {});

struct Prediction {
  int label = 0;  // argmax, lowest-index tie-break
  std::array<double, kNumClasses> probabilities{};
};

Prediction predict(const LogRegModel& model, const std::vector<double>& vec);

// Deterministic stratified partition into k folds; per-class counts per fold
// differ from perfect proportionality by at most 1. A class with fewer than
// k members raises a ValidationError naming it.
std::vector<std::vector<size_t>> stratified_kfold(const std::vector<int>& labels,
                                                  int k, uint64_t seed);

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  long support = 0;
};

struct MetricsReport {
  std::vector<std::vector<long>> confusion;  // rows = true, cols = predicted
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;
  double accuracy = 0;
};

// precision_c = TP/(TP+FP), recall_c = TP/(TP+FN), F1 the harmonic mean;
// any zero denominator yields 0 for that metric.
MetricsReport metrics_from_confusion(const std::vector<std::vector<long>>& confusion);

// One model per fold, trained on the other k-1 folds; fold confusion
// matrices are summed element-wise before metrics are derived.
MetricsReport cross_validate(const std::vector<LabeledFeature>& data, int k,
                             const Hyperparams& hyper, uint64_t seed);

}  // namespace pip::classifier
