#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "pip/classifier.hpp"
#include "pip/errors.hpp"

using namespace pip;
using namespace pip::classifier;

namespace {

GrayImage constant_image(int w, int h, double value) {
  GrayImage img;
  img.width = w;
  img.height = h;
  img.pixels.assign(static_cast<size_t>(w) * h, value);
  return img;
}

// Three well-separated Gaussian blobs in 2D, seed-fixed.
std::vector<LabeledFeature> make_blobs(int n_per_class, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.4);
  const double centers[3][2] = {{0, 0}, {6, 0}, {0, 6}};
  std::vector<LabeledFeature> data;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < n_per_class; ++i) {
      LabeledFeature rec;
      rec.page_id = "p" + std::to_string(c) + "_" + std::to_string(i);
      rec.vector = {centers[c][0] + noise(rng), centers[c][1] + noise(rng)};
      rec.label = c;
      data.push_back(std::move(rec));
    }
  return data;
}

// Independent check that the blobs really are linearly separable pairwise:
// brute-force search over a coarse grid of line directions.
bool pairwise_separable_2d(const std::vector<LabeledFeature>& data) {
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      bool separated = false;
      for (int deg = 0; deg < 360 && !separated; ++deg) {
        double nx = std::cos(deg * M_PI / 180), ny = std::sin(deg * M_PI / 180);
        double max_a = -1e18, min_b = 1e18;
        for (const auto& rec : data) {
          double proj = nx * rec.vector[0] + ny * rec.vector[1];
          if (rec.label == a) max_a = std::max(max_a, proj);
          if (rec.label == b) min_b = std::min(min_b, proj);
        }
        if (max_a < min_b) separated = true;
      }
      if (!separated) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("hog_features: constant image has no gradients") {
  auto v = hog_features(constant_image(64, 64, 0.5));
  REQUIRE(!v.empty());
  for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("hog_features: deterministic and of fixed length") {
  GrayImage img = constant_image(100, 80, 0.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      img.pixels[static_cast<size_t>(y) * img.width + x] = (x * 7 + y * 13) % 31;
  auto a = hog_features(img);
  auto b = hog_features(img);
  CHECK(a == b);
  // 256/32 = 8 cells per side, 7x7 blocks of 2x2x9.
  CHECK(a.size() == 7 * 7 * 2 * 2 * 9);
}

TEST_CASE("hog_features: vertical step edge concentrates in the 0-degree bin") {
  // Gradient of a vertical edge points horizontally: orientation 0, bin 0.
  // Hand-check the binning rule on one interior pixel first: gx = (1-0)/2,
  // gy = 0, angle = 0, position -0.5 splits between the wrapped bins 8 and 0.
  GrayImage img = constant_image(256, 256, 0.0);
  for (int y = 0; y < 256; ++y)
    for (int x = 128; x < 256; ++x) img.pixels[static_cast<size_t>(y) * 256 + x] = 1.0;
  auto v = hog_features(img);
  const int bins = 9;
  std::vector<double> per_bin(bins, 0.0);
  for (size_t i = 0; i < v.size(); ++i) per_bin[i % bins] += v[i];
  double total = 0;
  for (double e : per_bin) total += e;
  REQUIRE(total > 0);
  // Angle 0 votes split between bin 0 and the wrap bin 8; everything else
  // stays empty for a pure vertical edge.
  CHECK((per_bin[0] + per_bin[8]) / total == doctest::Approx(1.0));
  for (int b = 1; b < 8; ++b) CHECK(per_bin[b] == doctest::Approx(0.0));
}

TEST_CASE("hog_features: invariant under constant intensity shift") {
  GrayImage img = constant_image(64, 48, 0.0);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& px : img.pixels) px = u(rng);
  GrayImage shifted = img;
  for (auto& px : shifted.pixels) px += 10.0;
  auto a = hog_features(img);
  auto b = hog_features(shifted);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
}

TEST_CASE("hog_features rejects empty images") {
  CHECK_THROWS_AS(hog_features(GrayImage{}), ValidationError);
}

TEST_CASE("load_external_features: happy path and errors") {
  std::string good =
      R"({"page_id":"a","label":0,"vector":[1.0,2.0]})" "\n"
      R"({"page_id":"b","label":null,"vector":[3.0,4.0]})" "\n"
      R"({"page_id":"c","label":2,"vector":[5.0,6.0]})" "\n";
  auto recs = parse_external_features(good);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].label == 0);
  CHECK(recs[1].label == kUnlabeled);

  std::string ragged =
      R"({"page_id":"a","label":0,"vector":[1.0,2.0]})" "\n"
      R"({"page_id":"b","label":1,"vector":[1.0]})" "\n";
  CHECK_THROWS_WITH_AS(parse_external_features(ragged),
                       doctest::Contains("line 2"), ValidationError);

  // Out-of-range numbers are rejected at the parse layer.
  std::string overflow =
      R"({"page_id":"a","label":0,"vector":[1.0,1e999]})" "\n";
  CHECK_THROWS_AS(parse_external_features(overflow), ParseError);

  std::string bad_label =
      R"({"page_id":"a","label":7,"vector":[1.0,2.0]})" "\n";
  CHECK_THROWS_AS(parse_external_features(bad_label), ValidationError);
}

TEST_CASE("train_logreg: separable blobs reach >= 0.99 training accuracy") {
  auto data = make_blobs(100, 11);
  REQUIRE(pairwise_separable_2d(data));
  auto model = train_logreg(data);
  int correct = 0;
  for (const auto& rec : data)
    if (predict(model, rec.vector).label == rec.label) ++correct;
  CHECK(static_cast<double>(correct) / data.size() >= 0.99);
}

TEST_CASE("train_logreg: single sample per class is memorized") {
  std::vector<LabeledFeature> data{
      {"a", {1.0, 0.0}, 0}, {"b", {0.0, 1.0}, 1}, {"c", {-1.0, -1.0}, 2}};
  auto model = train_logreg(data);
  for (const auto& rec : data)
    CHECK(predict(model, rec.vector).label == rec.label);
}

TEST_CASE("train_logreg: weights shrink monotonically with L2 strength") {
  auto data = make_blobs(30, 5);
  auto norm = [](const LogRegModel& m) {
    double s = 0;
    for (const auto& row : m.weights)
      for (double w : row) s += w * w;
    return std::sqrt(s);
  };
  Hyperparams h;
  h.max_epochs = 500;
  double prev = 1e18;
  for (double l2 : {0.01, 0.5, 5.0}) {
    h.l2 = l2;
    double n = norm(train_logreg(data, h));
    CHECK(n < prev);
    prev = n;
  }
}

TEST_CASE("train_logreg: empty class is an error") {
  std::vector<LabeledFeature> data{{"a", {1.0}, 0}, {"b", {2.0}, 1}};
  CHECK_THROWS_WITH_AS(train_logreg(data), doctest::Contains("class 2"),
                       ValidationError);
}

TEST_CASE("predict: zero model gives uniform probabilities and label 0") {
  LogRegModel model;
  model.weights.assign(kNumClasses, std::vector<double>(4, 0.0));
  model.bias.assign(kNumClasses, 0.0);
  model.feature_mean.assign(4, 0.0);
  model.feature_scale.assign(4, 1.0);
  auto pred = predict(model, {1, 2, 3, 4});
  CHECK(pred.label == 0);
  for (double p : pred.probabilities)
    CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("predict: probabilities sum to 1 within 1e-9") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0, 3);
  LogRegModel model;
  model.weights.assign(kNumClasses, std::vector<double>(8));
  model.bias.assign(kNumClasses, 0.0);
  model.feature_mean.assign(8, 0.0);
  model.feature_scale.assign(8, 1.0);
  for (auto& row : model.weights)
    for (double& w : row) w = n(rng);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> v(8);
    for (double& x : v) x = n(rng);
    auto pred = predict(model, v);
    double sum = 0;
    for (double p : pred.probabilities) {
      CHECK(p > 0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("predict: label invariant under constant logit shift") {
  LogRegModel model;
  model.weights.assign(kNumClasses, std::vector<double>{1.0, -2.0});
  model.weights[1] = {0.5, 0.5};
  model.weights[2] = {-1.0, 1.0};
  model.bias = {0.1, -0.3, 0.2};
  model.feature_mean.assign(2, 0.0);
  model.feature_scale.assign(2, 1.0);
  LogRegModel shifted = model;
  for (double& b : shifted.bias) b += 7.5;
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n(0, 2);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> v{n(rng), n(rng)};
    CHECK(predict(model, v).label == predict(shifted, v).label);
  }
}

TEST_CASE("predict: dimension mismatch") {
  LogRegModel model;
  model.weights.assign(kNumClasses, std::vector<double>(4, 0.0));
  model.bias.assign(kNumClasses, 0.0);
  model.feature_mean.assign(4, 0.0);
  model.feature_scale.assign(4, 1.0);
  CHECK_THROWS_AS(predict(model, {1.0, 2.0}), ValidationError);
}

TEST_CASE("model JSON round-trip") {
  auto data = make_blobs(5, 2);
  auto model = train_logreg(data);
  auto back = LogRegModel::from_json(model.to_json());
  CHECK(back.weights == model.weights);
  CHECK(back.bias == model.bias);
  CHECK(back.hyper.l2 == model.hyper.l2);
}

TEST_CASE("stratified_kfold: exact divisibility") {
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 10; ++i) labels.push_back(c);
  auto folds = stratified_kfold(labels, 10, 1);
  REQUIRE(folds.size() == 10);
  for (const auto& fold : folds) {
    REQUIRE(fold.size() == 3);
    std::set<int> classes;
    for (size_t idx : fold) classes.insert(labels[idx]);
    CHECK(classes.size() == 3);  // exactly one of each
  }
}

TEST_CASE("stratified_kfold: two balanced classes, k=5") {
  std::vector<int> labels{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  auto folds = stratified_kfold(labels, 5, 9);
  for (const auto& fold : folds) {
    REQUIRE(fold.size() == 2);
    CHECK(labels[fold[0]] + labels[fold[1]] == 1);
  }
}

TEST_CASE("stratified_kfold: paper-sized class counts stay within +-1") {
  std::vector<int> labels;
  for (int i = 0; i < 28; ++i) labels.push_back(0);
  for (int i = 0; i < 117; ++i) labels.push_back(1);
  for (int i = 0; i < 119; ++i) labels.push_back(2);
  auto folds = stratified_kfold(labels, 10, 4);
  const double ideal[3] = {2.8, 11.7, 11.9};
  size_t total = 0;
  for (const auto& fold : folds) {
    long counts[3] = {0, 0, 0};
    for (size_t idx : fold) counts[labels[idx]]++;
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(counts[c] - ideal[c]) <= 1.0);
    total += fold.size();
  }
  CHECK(total == labels.size());
}

TEST_CASE("stratified_kfold: partition property and determinism") {
  std::vector<int> labels;
  std::mt19937 rng(8);
  for (int i = 0; i < 97; ++i) labels.push_back(rng() % 3 == 0 ? 0 : (rng() % 2));
  for (int& l : labels) (void)l;
  // ensure each class has >= k members
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 5; ++i) labels.push_back(c);
  auto a = stratified_kfold(labels, 5, 77);
  auto b = stratified_kfold(labels, 5, 77);
  CHECK(a == b);
  std::set<size_t> seen;
  for (const auto& fold : a)
    for (size_t idx : fold) CHECK(seen.insert(idx).second);
  CHECK(seen.size() == labels.size());
}

TEST_CASE("stratified_kfold: class smaller than k") {
  std::vector<int> labels{0, 0, 0, 1};
  CHECK_THROWS_WITH_AS(stratified_kfold(labels, 3, 0),
                       doctest::Contains("class 1"), ValidationError);
}

TEST_CASE("metrics_from_confusion reproduces the published table") {
  std::vector<std::vector<long>> confusion{
      {28, 0, 0}, {0, 105, 12}, {0, 6, 113}};
  auto report = metrics_from_confusion(confusion);
  CHECK(report.per_class[0].precision == doctest::Approx(1.0));
  CHECK(report.per_class[0].recall == doctest::Approx(1.0));
  CHECK(report.per_class[1].precision == doctest::Approx(0.9459).epsilon(1e-4));
  CHECK(report.per_class[1].recall == doctest::Approx(0.8974).epsilon(1e-4));
  CHECK(report.per_class[1].f1 == doctest::Approx(0.9211).epsilon(1e-4));
  CHECK(report.per_class[2].precision == doctest::Approx(0.9040).epsilon(1e-4));
  CHECK(report.per_class[2].recall == doctest::Approx(0.9496).epsilon(1e-4));
  CHECK(report.per_class[2].f1 == doctest::Approx(0.9262).epsilon(1e-4));
  CHECK(report.accuracy == doctest::Approx(0.9318).epsilon(1e-4));
  CHECK(report.macro_f1 == doctest::Approx(0.9491).epsilon(1e-4));
}

TEST_CASE("metrics_from_confusion: perfect and degenerate matrices") {
  auto perfect = metrics_from_confusion({{5, 0, 0}, {0, 5, 0}, {0, 0, 5}});
  CHECK(perfect.accuracy == doctest::Approx(1.0));
  CHECK(perfect.macro_f1 == doctest::Approx(1.0));

  // class 2 never occurs and is never predicted: metrics 0, no fault
  auto degenerate = metrics_from_confusion({{3, 1, 0}, {0, 4, 0}, {0, 0, 0}});
  CHECK(degenerate.per_class[2].precision == 0.0);
  CHECK(degenerate.per_class[2].recall == 0.0);
  CHECK(degenerate.per_class[2].f1 == 0.0);
}

TEST_CASE("metrics_from_confusion: non-square is an error") {
  CHECK_THROWS_AS(metrics_from_confusion({{1, 2}, {3, 4}, {5, 6}}),
                  ValidationError);
}

TEST_CASE("metrics identity: accuracy equals support-weighted recall") {
  std::vector<std::vector<long>> confusion{{9, 2, 1}, {3, 15, 4}, {0, 5, 21}};
  auto report = metrics_from_confusion(confusion);
  long total = 0;
  for (const auto& row : confusion)
    for (long v : row) total += v;
  double weighted = 0;
  for (size_t c = 0; c < report.per_class.size(); ++c)
    weighted += static_cast<double>(report.per_class[c].support) / total *
                report.per_class[c].recall;
  CHECK(report.accuracy == doctest::Approx(weighted).epsilon(1e-12));
}

TEST_CASE("cross_validate: separable blobs reach macro-F1 >= 0.95") {
  auto data = make_blobs(100, 11);
  Hyperparams h;
  h.max_epochs = 400;
  auto report = cross_validate(data, 10, h, 11);
  CHECK(report.macro_f1 >= 0.95);
  long total = 0;
  for (const auto& row : report.confusion)
    for (long v : row) total += v;
  CHECK(total == static_cast<long>(data.size()));
}

TEST_CASE("cross_validate: duplicated samples with k=2 are fully recovered") {
  // Duplicating every sample means each held-out point has its twin in the
  // training fold; a consistent learner classifies it correctly.
  auto base = make_blobs(10, 3);
  std::vector<LabeledFeature> doubled;
  for (const auto& rec : base) {
    doubled.push_back(rec);
    auto copy = rec;
    copy.page_id += "_dup";
    doubled.push_back(copy);
  }
  Hyperparams h;
  h.max_epochs = 400;
  auto report = cross_validate(doubled, 2, h, 5);
  CHECK(report.accuracy == doctest::Approx(1.0));
}
