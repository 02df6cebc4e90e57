#include "pip/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pip/errors.hpp"

namespace pip::classifier {

// ---------------------------------------------------------------------------
// HOG
// ---------------------------------------------------------------------------

namespace {

GrayImage resize_bilinear(const GrayImage& src, int size) {
  GrayImage dst;
  dst.width = size;
  dst.height = size;
  dst.pixels.resize(static_cast<size_t>(size) * size);
  const double sx = static_cast<double>(src.width) / size;
  const double sy = static_cast<double>(src.height) / size;
  for (int y = 0; y < size; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, src.height - 1);
    int y1 = std::min(y0 + 1, src.height - 1);
    double wy = std::clamp(fy - y0, 0.0, 1.0);
    for (int x = 0; x < size; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, src.width - 1);
      int x1 = std::min(x0 + 1, src.width - 1);
      double wx = std::clamp(fx - x0, 0.0, 1.0);
      double top = src.at(x0, y0) * (1 - wx) + src.at(x1, y0) * wx;
      double bot = src.at(x0, y1) * (1 - wx) + src.at(x1, y1) * wx;
      dst.pixels[static_cast<size_t>(y) * size + x] = top * (1 - wy) + bot * wy;
    }
  }
  return dst;
}

}  // namespace

std::vector<double> hog_features(const GrayImage& image, const HogConfig& cfg) {
  if (image.width <= 0 || image.height <= 0 || image.pixels.empty())
    throw ValidationError("hog_features requires a non-empty image");
  if (image.pixels.size() !=
      static_cast<size_t>(image.width) * static_cast<size_t>(image.height))
    throw ValidationError("image pixel buffer does not match its dimensions");

  GrayImage img = (image.width == cfg.resize_to && image.height == cfg.resize_to)
                      ? image
                      : resize_bilinear(image, cfg.resize_to);

  const int n = cfg.resize_to;
  const int cells = n / cfg.cell_size;
  const double bin_width = 180.0 / cfg.num_bins;

  // Per-cell orientation histograms; magnitude split linearly between the
  // two nearest bin centers, wrapping at 180.
  std::vector<std::vector<double>> hist(
      static_cast<size_t>(cells) * cells, std::vector<double>(cfg.num_bins, 0.0));
  auto clamped = [&](int x, int y) {
    return img.at(std::clamp(x, 0, n - 1), std::clamp(y, 0, n - 1));
  };
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double gx = (clamped(x + 1, y) - clamped(x - 1, y)) / 2.0;
      double gy = (clamped(x, y + 1) - clamped(x, y - 1)) / 2.0;
      double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx) * 180.0 / M_PI;  // (-180, 180]
      if (angle < 0) angle += 180.0;                     // unsigned
      if (angle >= 180.0) angle -= 180.0;
      double pos = angle / bin_width - 0.5;
      int lo = static_cast<int>(std::floor(pos));
      double frac = pos - lo;
      int b0 = (lo % cfg.num_bins + cfg.num_bins) % cfg.num_bins;
      int b1 = (b0 + 1) % cfg.num_bins;
      auto& cell = hist[static_cast<size_t>(y / cfg.cell_size) * cells +
                        x / cfg.cell_size];
      cell[b0] += mag * (1.0 - frac);
      cell[b1] += mag * frac;
    }
  }

  // Overlapping blocks (stride one cell), L2-hys normalization.
  std::vector<double> out;
  const int blocks = cells - cfg.block_cells + 1;
  const int block_dim = cfg.block_cells * cfg.block_cells * cfg.num_bins;
  out.reserve(static_cast<size_t>(blocks) * blocks * block_dim);
  for (int by = 0; by < blocks; ++by) {
    for (int bx = 0; bx < blocks; ++bx) {
      std::vector<double> block;
      block.reserve(block_dim);
      for (int cy = 0; cy < cfg.block_cells; ++cy)
        for (int cx = 0; cx < cfg.block_cells; ++cx) {
          const auto& cell =
              hist[static_cast<size_t>(by + cy) * cells + (bx + cx)];
          block.insert(block.end(), cell.begin(), cell.end());
        }
      auto l2norm = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
      };
      double norm = l2norm(block);
      if (norm > 0) {
        for (double& x : block) x = std::min(x / norm, cfg.clip);
        double renorm = l2norm(block);
        if (renorm > 0)
          for (double& x : block) x /= renorm;
      }
      out.insert(out.end(), block.begin(), block.end());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// External feature files
// ---------------------------------------------------------------------------

std::vector<LabeledFeature> parse_external_features(const std::string& jsonl) {
  std::vector<LabeledFeature> out;
  std::istringstream in(jsonl);
  std::string line;
  size_t line_no = 0;
  size_t expected_dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("feature file line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    LabeledFeature rec;
    if (!j.contains("page_id") || !j.contains("vector"))
      throw ValidationError("feature file line " + std::to_string(line_no) +
                            ": missing page_id or vector");
    rec.page_id = j["page_id"].get<std::string>();
    if (j.contains("label") && !j["label"].is_null()) {
      int label = j["label"].get<int>();
      if (label < 0 || label >= kNumClasses)
        throw ValidationError("feature file line " + std::to_string(line_no) +
                              ": label out of range");
      rec.label = label;
    }
    rec.vector = j["vector"].get<std::vector<double>>();
    for (double v : rec.vector)
      if (!std::isfinite(v))
        throw ValidationError("feature file line " + std::to_string(line_no) +
                              ": non-finite vector entry");
    if (expected_dim == 0)
      expected_dim = rec.vector.size();
    else if (rec.vector.size() != expected_dim)
      throw ValidationError("feature file line " + std::to_string(line_no) +
                            ": vector has " + std::to_string(rec.vector.size()) +
                            " dims, expected " + std::to_string(expected_dim));
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<LabeledFeature> load_external_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_external_features(buf.str());
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

namespace {

std::array<double, kNumClasses> softmax(const std::array<double, kNumClasses>& z) {
  double zmax = *std::max_element(z.begin(), z.end());
  std::array<double, kNumClasses> p{};
  double sum = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    p[c] = std::exp(z[c] - zmax);
    sum += p[c];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::array<double, kNumClasses> logits(const LogRegModel& m,
                                       const std::vector<double>& x) {
  std::array<double, kNumClasses> z{};
  for (int c = 0; c < kNumClasses; ++c) {
    double dot = m.bias[c];
    const auto& w = m.weights[c];
    for (size_t d = 0; d < w.size(); ++d)
      dot += w[d] * (x[d] - m.feature_mean[d]) / m.feature_scale[d];
    z[c] = dot;
  }
  return z;
}

}  // namespace

LogRegModel train_logreg(const std::vector<LabeledFeature>& data,
                         const Hyperparams& hyper) {
  if (data.empty()) throw ValidationError("train_logreg: empty dataset");
  const size_t dim = data.front().vector.size();
  std::array<long, kNumClasses> counts{};
  for (const auto& rec : data) {
    if (rec.label == kUnlabeled)
      throw ValidationError("train_logreg: unlabeled sample '" + rec.page_id +
                            "'");
    if (rec.vector.size() != dim)
      throw ValidationError("train_logreg: inconsistent vector length");
    counts[rec.label]++;
  }
  for (int c = 0; c < kNumClasses; ++c)
    if (counts[c] == 0)
      throw ValidationError("train_logreg: class " + std::to_string(c) +
                            " has no samples");

  LogRegModel model;
  model.hyper = hyper;
  model.weights.assign(kNumClasses, std::vector<double>(dim, 0.0));
  model.bias.assign(kNumClasses, 0.0);
  model.feature_mean.assign(dim, 0.0);
  model.feature_scale.assign(dim, 1.0);
  if (hyper.standardize) {
    for (const auto& rec : data)
      for (size_t d = 0; d < dim; ++d) model.feature_mean[d] += rec.vector[d];
    for (size_t d = 0; d < dim; ++d) model.feature_mean[d] /= data.size();
    std::vector<double> var(dim, 0.0);
    for (const auto& rec : data)
      for (size_t d = 0; d < dim; ++d) {
        double diff = rec.vector[d] - model.feature_mean[d];
        var[d] += diff * diff;
      }
    for (size_t d = 0; d < dim; ++d) {
      double s = std::sqrt(var[d] / data.size());
      model.feature_scale[d] = s > 0 ? s : 1.0;
    }
  }

  const double n = static_cast<double>(data.size());
  std::vector<std::vector<double>> grad_w(kNumClasses,
                                          std::vector<double>(dim));
  std::vector<double> grad_b(kNumClasses);
  for (int epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    for (auto& row : grad_w) std::fill(row.begin(), row.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (const auto& rec : data) {
      auto p = softmax(logits(model, rec.vector));
      for (int c = 0; c < kNumClasses; ++c) {
        double err = p[c] - (rec.label == c ? 1.0 : 0.0);
        grad_b[c] += err / n;
        auto& gw = grad_w[c];
        for (size_t d = 0; d < dim; ++d)
          gw[d] += err * (rec.vector[d] - model.feature_mean[d]) /
                   model.feature_scale[d] / n;
      }
    }
    // L2 applies to weights only, not biases.
    double grad_norm_sq = 0;
    for (int c = 0; c < kNumClasses; ++c) {
      grad_norm_sq += grad_b[c] * grad_b[c];
      for (size_t d = 0; d < dim; ++d) {
        grad_w[c][d] += hyper.l2 * model.weights[c][d];
        grad_norm_sq += grad_w[c][d] * grad_w[c][d];
      }
    }
    for (int c = 0; c < kNumClasses; ++c) {
      model.bias[c] -= hyper.learning_rate * grad_b[c];
      for (size_t d = 0; d < dim; ++d)
        model.weights[c][d] -= hyper.learning_rate * grad_w[c][d];
    }
    if (std::sqrt(grad_norm_sq) < hyper.tolerance) break;
  }
  return model;
}

Prediction predict(const LogRegModel& model, const std::vector<double>& vec) {
  if (vec.size() != model.weights.front().size())
    throw ValidationError("predict: vector has " + std::to_string(vec.size()) +
                          " dims, model expects " +
                          std::to_string(model.weights.front().size()));
  Prediction pred;
  pred.probabilities = softmax(logits(model, vec));
  pred.label = 0;
  for (int c = 1; c < kNumClasses; ++c)
    if (pred.probabilities[c] > pred.probabilities[pred.label]) pred.label = c;
  return pred;
}

// ---------------------------------------------------------------------------
// Model serialization
// ---------------------------------------------------------------------------

std::string LogRegModel::to_json() const {
  nlohmann::ordered_json j;
  j["weights"] = weights;
  j["bias"] = bias;
  j["hyperparams"] = {{"learning_rate", hyper.learning_rate},
                      {"l2", hyper.l2},
                      {"max_epochs", hyper.max_epochs},
                      {"tolerance", hyper.tolerance},
                      {"seed", hyper.seed},
                      {"standardize", hyper.standardize}};
  j["feature_mean"] = feature_mean;
  j["feature_scale"] = feature_scale;
  return j.dump(2);
}

LogRegModel LogRegModel::from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  LogRegModel m;
  m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  m.bias = j.at("bias").get<std::vector<double>>();
  const auto& h = j.at("hyperparams");
  m.hyper.learning_rate = h.at("learning_rate").get<double>();
  m.hyper.l2 = h.at("l2").get<double>();
  m.hyper.max_epochs = h.at("max_epochs").get<int>();
  m.hyper.tolerance = h.at("tolerance").get<double>();
  m.hyper.seed = h.at("seed").get<uint64_t>();
  m.hyper.standardize = h.at("standardize").get<bool>();
  m.feature_mean = j.at("feature_mean").get<std::vector<double>>();
  m.feature_scale = j.at("feature_scale").get<std::vector<double>>();
  return m;
}

// ---------------------------------------------------------------------------
// Stratified k-fold and metrics
// ---------------------------------------------------------------------------

std::vector<std::vector<size_t>> stratified_kfold(const std::vector<int>& labels,
                                                  int k, uint64_t seed) {
  if (k < 2) throw ValidationError("stratified_kfold requires k >= 2");
  std::map<int, std::vector<size_t>> by_class;
  for (size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, members] : by_class)
    if (members.size() < static_cast<size_t>(k))
      throw ValidationError("class " + std::to_string(label) + " has only " +
                            std::to_string(members.size()) +
                            " samples, fewer than k=" + std::to_string(k));
  std::vector<std::vector<size_t>> folds(k);
  std::mt19937_64 rng(seed);
  size_t next_fold = 0;
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    // Deal round-robin; carry the starting fold across classes so overall
    // fold sizes stay balanced.
    for (size_t i = 0; i < members.size(); ++i)
      folds[(next_fold + i) % k].push_back(members[i]);
    next_fold = (next_fold + members.size()) % k;
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

MetricsReport metrics_from_confusion(
    const std::vector<std::vector<long>>& confusion) {
  const size_t n = confusion.size();
  for (const auto& row : confusion) {
    if (row.size() != n)
      throw ValidationError("confusion matrix must be square");
    for (long v : row)
      if (v < 0) throw ValidationError("confusion matrix entries must be >= 0");
  }
  MetricsReport report;
  report.confusion = confusion;
  long total = 0, correct = 0;
  for (size_t c = 0; c < n; ++c) {
    long tp = confusion[c][c];
    long row_sum = 0, col_sum = 0;
    for (size_t j = 0; j < n; ++j) {
      row_sum += confusion[c][j];
      col_sum += confusion[j][c];
      total += confusion[c][j];
    }
    correct += tp;
    ClassMetrics m;
    m.support = row_sum;
    m.precision = col_sum > 0 ? static_cast<double>(tp) / col_sum : 0.0;
    m.recall = row_sum > 0 ? static_cast<double>(tp) / row_sum : 0.0;
    m.f1 = (m.precision + m.recall) > 0
               ? 2 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    report.per_class.push_back(m);
    report.macro_precision += m.precision;
    report.macro_recall += m.recall;
    report.macro_f1 += m.f1;
  }
  if (n > 0) {
    report.macro_precision /= n;
    report.macro_recall /= n;
    report.macro_f1 /= n;
  }
  report.accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
  return report;
}

MetricsReport cross_validate(const std::vector<LabeledFeature>& data, int k,
                             const Hyperparams& hyper, uint64_t seed) {
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const auto& rec : data) {
    if (rec.label == kUnlabeled)
      throw ValidationError("cross_validate: unlabeled sample '" +
                            rec.page_id + "'");
    labels.push_back(rec.label);
  }
  auto folds = stratified_kfold(labels, k, seed);
  std::vector<std::vector<long>> confusion(
      kNumClasses, std::vector<long>(kNumClasses, 0));
  for (int fold = 0; fold < k; ++fold) {
    std::vector<bool> held(data.size(), false);
    for (size_t idx : folds[fold]) held[idx] = true;
    std::vector<LabeledFeature> train;
    train.reserve(data.size() - folds[fold].size());
    for (size_t i = 0; i < data.size(); ++i)
      if (!held[i]) train.push_back(data[i]);
    LogRegModel model = train_logreg(train, hyper);
    for (size_t idx : folds[fold]) {
      auto pred = predict(model, data[idx].vector);
      confusion[data[idx].label][pred.label]++;
    }
  }
  return metrics_from_confusion(confusion);
}

}  // namespace pip::classifier
