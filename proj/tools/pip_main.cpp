// pip: Peirce-manuscript processing toolkit, single CLI entry point.
//
// Subcommands: ingest | stats | classify (train/predict/crossval) |
// detect-eval | annotate | eg (translate/check) | prompt | score | export-rdf.
// Exit codes: 0 success, 1 validation/domain error, 2 I/O or transport error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pip/annotations.hpp"
#include "pip/classifier.hpp"
#include "pip/corpus.hpp"
#include "pip/detect.hpp"
#include "pip/eg.hpp"
#include "pip/errors.hpp"
#include "pip/fetch.hpp"
#include "pip/formula.hpp"
#include "pip/kg.hpp"
#include "pip/vlm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Shared run configuration: defaults < config file < command-line flags.
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string output_root = ".";
  int parallel = 4;
  uint64_t seed = 0;
  int k = 10;
  double iou_threshold = 0.5;
  std::string blank_regex;
  std::string pip_namespace = "https://example.org/pip/";
  pip::classifier::Hyperparams hyper;
  std::vector<pip::vlm::ModelConfig> models;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pip::IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pip::IoError("cannot write file: " + path);
  out << content;
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw pip::IoError("input file not found: " + path);
}

std::vector<pip::vlm::ModelConfig> parse_models(const json& arr) {
  std::vector<pip::vlm::ModelConfig> models;
  for (const auto& m : arr) {
    pip::vlm::ModelConfig cfg;
    cfg.model_name = m.at("model").get<std::string>();
    cfg.endpoint = m.at("endpoint").get<std::string>();
    cfg.credential_env = m.value("credential_env", "");
    cfg.temperature = m.value("temperature", 0.0);
    cfg.max_attempts = m.value("max_attempts", 3);
    cfg.backoff_base_ms = m.value("backoff_base_ms", 1000);
    cfg.rate_limit_per_minute = m.value("rate_limit_per_minute", 0);
    models.push_back(std::move(cfg));
  }
  return models;
}

// Applies config-file values for options the command line left untouched.
void merge_config_file(RunConfig& cfg, const std::string& path,
                       const CLI::App& app) {
  json j;
  try {
    j = json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw pip::ParseError("config file " + path + ": " + e.what());
  }
  auto untouched = [&](const std::string& flag) {
    const CLI::Option* opt = app.get_option_no_throw(flag);
    return opt == nullptr || opt->count() == 0;
  };
  if (j.contains("output_root") && untouched("--out-root"))
    cfg.output_root = j["output_root"].get<std::string>();
  if (j.contains("parallel") && untouched("--parallel"))
    cfg.parallel = j["parallel"].get<int>();
  if (j.contains("seed") && untouched("--seed"))
    cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("k") && untouched("--k")) cfg.k = j["k"].get<int>();
  if (j.contains("iou_threshold") && untouched("--iou"))
    cfg.iou_threshold = j["iou_threshold"].get<double>();
  if (j.contains("blank_regex") && untouched("--blank-regex"))
    cfg.blank_regex = j["blank_regex"].get<std::string>();
  if (j.contains("pip_namespace"))
    cfg.pip_namespace = j["pip_namespace"].get<std::string>();
  if (j.contains("hyperparams")) {
    const auto& h = j["hyperparams"];
    cfg.hyper.learning_rate = h.value("learning_rate", cfg.hyper.learning_rate);
    cfg.hyper.l2 = h.value("l2", cfg.hyper.l2);
    cfg.hyper.max_epochs = h.value("max_epochs", cfg.hyper.max_epochs);
    cfg.hyper.tolerance = h.value("tolerance", cfg.hyper.tolerance);
    cfg.hyper.standardize = h.value("standardize", cfg.hyper.standardize);
  }
  if (j.contains("models")) cfg.models = parse_models(j["models"]);
}

ordered_json effective_config(const RunConfig& cfg) {
  ordered_json j;
  j["output_root"] = cfg.output_root;
  j["parallel"] = cfg.parallel;
  j["seed"] = cfg.seed;
  j["k"] = cfg.k;
  j["iou_threshold"] = cfg.iou_threshold;
  j["blank_regex"] = cfg.blank_regex;
  j["pip_namespace"] = cfg.pip_namespace;
  j["hyperparams"] = {{"learning_rate", cfg.hyper.learning_rate},
                      {"l2", cfg.hyper.l2},
                      {"max_epochs", cfg.hyper.max_epochs},
                      {"tolerance", cfg.hyper.tolerance},
                      {"standardize", cfg.hyper.standardize}};
  ordered_json models = ordered_json::array();
  for (const auto& m : cfg.models)
    models.push_back({{"model", m.model_name},
                      {"endpoint", m.endpoint},
                      {"credential_env", m.credential_env},
                      {"temperature", m.temperature},
                      {"max_attempts", m.max_attempts},
                      {"rate_limit_per_minute", m.rate_limit_per_minute}});
  j["models"] = std::move(models);
  return j;
}

pip::anno::Namespaces namespaces_for(const RunConfig& cfg) {
  pip::anno::Namespaces ns;
  ns.pip = cfg.pip_namespace;
  return ns;
}

// ---------------------------------------------------------------------------
// Manifest loading shared by ingest/stats/annotate
// ---------------------------------------------------------------------------

std::vector<std::string> manifest_files(const std::string& manifests) {
  std::vector<std::string> files;
  if (fs::is_directory(manifests)) {
    for (const auto& entry : fs::directory_iterator(manifests))
      if (entry.path().extension() == ".json")
        files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
  } else {
    require_file(manifests);
    files.push_back(manifests);
  }
  if (files.empty())
    throw pip::ValidationError("no manifest JSON files under " + manifests);
  return files;
}

std::vector<pip::corpus::CanvasRecord> load_manifests(
    const std::string& manifests, const RunConfig& cfg) {
  pip::corpus::ParseOptions opts;
  if (!cfg.blank_regex.empty()) opts.blank_regex = cfg.blank_regex;
  std::vector<pip::corpus::CanvasRecord> records;
  for (const auto& file : manifest_files(manifests)) {
    auto recs = pip::corpus::parse_manifest(slurp(file), opts);
    records.insert(records.end(), recs.begin(), recs.end());
  }
  return records;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_ingest(const RunConfig& cfg, const std::string& manifests,
               bool skip_fetch) {
  auto records = load_manifests(manifests, cfg);
  auto filtered = pip::corpus::filter_blank(records);

  ordered_json report;
  report["total_pages"] = records.size();
  report["blank_removed"] = filtered.removed_count;
  report["retained"] = filtered.kept.size();

  ordered_json items = ordered_json::array();
  for (const auto& rec : filtered.kept)
    items.push_back({{"canvas_uri", rec.canvas_uri},
                     {"manifest_id", rec.manifest_id},
                     {"sequence_index", rec.sequence_index},
                     {"width", rec.width_px},
                     {"height", rec.height_px},
                     {"label", rec.label}});
  spill((fs::path(cfg.output_root) / "records.json").string(), items.dump(2));

  if (!skip_fetch) {
    pip::corpus::FetchOptions fopts;
    fopts.max_parallel = cfg.parallel;
    fopts.jitter_seed = cfg.seed;
    auto fetch_report = pip::corpus::fetch_corpus(
        filtered.kept, (fs::path(cfg.output_root) / "images").string(), fopts);
    report["downloaded"] = fetch_report.downloaded;
    report["skipped"] = fetch_report.skipped;
    report["failed"] = fetch_report.failed;
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_stats(const RunConfig& cfg, const std::string& manifests,
              const std::string& out_csv) {
  auto records = load_manifests(manifests, cfg);
  auto stats =
      pip::corpus::corpus_stats(records, (long)manifest_files(manifests).size());
  std::string csv = stats.to_csv();
  if (!out_csv.empty())
    spill(out_csv, csv);
  else
    std::cout << csv;
  std::cerr << "pages=" << stats.total_pages
            << " blank=" << stats.blank_removed
            << " retained=" << stats.retained << "\n";
  return 0;
}

ordered_json metrics_to_json(const pip::classifier::MetricsReport& report) {
  ordered_json j;
  j["confusion"] = report.confusion;
  ordered_json per_class = ordered_json::array();
  for (const auto& m : report.per_class)
    per_class.push_back({{"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  j["per_class"] = std::move(per_class);
  j["accuracy"] = report.accuracy;
  j["macro_precision"] = report.macro_precision;
  j["macro_recall"] = report.macro_recall;
  j["macro_f1"] = report.macro_f1;
  return j;
}

int cmd_classify_train(const RunConfig& cfg, const std::string& features,
                       const std::string& out) {
  require_file(features);
  auto data = pip::classifier::load_external_features(features);
  pip::classifier::Hyperparams hyper = cfg.hyper;
  hyper.seed = cfg.seed;
  auto model = pip::classifier::train_logreg(data, hyper);
  spill(out, model.to_json());
  std::cerr << "model written to " << out << "\n";
  return 0;
}

int cmd_classify_predict(const std::string& features,
                         const std::string& model_path) {
  require_file(features);
  require_file(model_path);
  auto model = pip::classifier::LogRegModel::from_json(slurp(model_path));
  auto data = pip::classifier::load_external_features(features);
  for (const auto& rec : data) {
    auto pred = pip::classifier::predict(model, rec.vector);
    ordered_json j;
    j["page_id"] = rec.page_id;
    j["label"] = pred.label;
    j["probabilities"] = pred.probabilities;
    std::cout << j.dump() << "\n";
  }
  return 0;
}

int cmd_classify_crossval(const RunConfig& cfg, const std::string& features) {
  require_file(features);
  auto data = pip::classifier::load_external_features(features);
  pip::classifier::Hyperparams hyper = cfg.hyper;
  hyper.seed = cfg.seed;
  auto report = pip::classifier::cross_validate(data, cfg.k, hyper, cfg.seed);
  std::cout << metrics_to_json(report).dump(2) << "\n";
  return 0;
}

int cmd_detect_eval(const RunConfig& cfg, const std::string& pred_path,
                    const std::string& gt_path, double report_threshold,
                    bool has_report_threshold) {
  require_file(pred_path);
  require_file(gt_path);
  auto preds = pip::detect::load_boxes(pred_path);
  auto gts = pip::detect::load_boxes(gt_path);
  std::optional<double> thr;
  if (has_report_threshold) thr = report_threshold;
  std::set<std::string> class_set;
  for (const auto& b : gts) class_set.insert(b.class_name);
  for (const auto& b : preds) class_set.insert(b.class_name);
  std::vector<std::string> classes(class_set.begin(), class_set.end());
  auto report = pip::detect::evaluate_dataset(preds, gts, classes,
                                              cfg.iou_threshold, thr);

  ordered_json j;
  ordered_json per_class = ordered_json::array();
  for (const auto& c : report.per_class) {
    ordered_json cj;
    cj["class"] = c.class_name;
    if (c.ap)
      cj["ap"] = *c.ap;
    else
      cj["ap"] = nullptr;
    cj["best_f1"] = c.best_f1;
    cj["best_f1_threshold"] = c.best_f1_threshold;
    cj["tp"] = c.tp;
    cj["fp"] = c.fp;
    cj["fn"] = c.fn;
    per_class.push_back(std::move(cj));
  }
  j["per_class"] = std::move(per_class);
  if (report.map)
    j["map"] = *report.map;
  else
    j["map"] = nullptr;
  j["best_f1"] = report.best_f1;
  j["best_f1_threshold"] = report.best_f1_threshold;
  j["precision_at_best_f1"] = report.precision_at_best_f1;
  j["recall_at_best_f1"] = report.recall_at_best_f1;
  j["report_threshold"] = report.report_threshold;
  j["tp"] = report.tp;
  j["fp"] = report.fp;
  j["fn"] = report.fn;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_annotate(const RunConfig& cfg, const std::string& detections_path,
                 const std::string& manifest_path, const std::string& out,
                 const std::string& embed_out, const std::string& page_uri) {
  require_file(detections_path);
  require_file(manifest_path);
  auto detections = pip::detect::load_boxes(detections_path);
  auto canvases = pip::corpus::parse_manifest(slurp(manifest_path));

  std::map<std::string, const pip::corpus::CanvasRecord*> by_uri;
  for (const auto& c : canvases) by_uri[c.canvas_uri] = &c;

  pip::anno::AnnotationPage page;
  page.id = page_uri;
  std::map<std::string, int> per_canvas_index;
  for (const auto& det : detections) {
    auto it = by_uri.find(det.page_id);
    if (it == by_uri.end())
      throw pip::ValidationError("detection page_id '" + det.page_id +
                                 "' matches no canvas in the manifest");
    int index = per_canvas_index[det.page_id]++;
    page.items.push_back(pip::anno::detection_to_annotation(
        det, *it->second, page_uri, index));
  }
  if (page.items.empty())
    throw pip::ValidationError("no detections to annotate");

  auto ns = namespaces_for(cfg);
  spill(out, pip::anno::build_annotation_page(page.items, page_uri, ns));
  if (!embed_out.empty())
    spill(embed_out,
          pip::anno::embed_in_manifest(slurp(manifest_path), page, ns));
  std::cerr << page.items.size() << " annotations written to " << out << "\n";
  return 0;
}

// Reads an EG file, a formula file, or an inline formula string.
pip::eg::Formula formula_from_arg(const std::string& arg) {
  std::string text = fs::exists(arg) ? slurp(arg) : arg;
  size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text.compare(first, 6, "(sheet") == 0)
    return pip::eg::eg_to_formula(pip::eg::parse_eg(text));
  return pip::eg::parse_formula(text);
}

int cmd_eg_translate(const std::string& file, const std::string& syntax) {
  require_file(file);
  auto graph = pip::eg::parse_eg(slurp(file));
  auto formula = pip::eg::eg_to_formula(graph);
  pip::eg::FormulaSyntax out_syntax =
      syntax == "ascii"   ? pip::eg::FormulaSyntax::Ascii
      : syntax == "latex" ? pip::eg::FormulaSyntax::LatexTokens
                          : pip::eg::FormulaSyntax::Unicode;
  std::cout << pip::eg::render_formula(formula, out_syntax) << "\n";
  return 0;
}

int cmd_eg_check(const std::string& lhs, const std::string& rhs, int bound) {
  auto f = formula_from_arg(lhs);
  auto g = formula_from_arg(rhs);
  auto verdict = pip::eg::equivalent_bounded(f, g, bound);
  ordered_json j;
  j["equivalent"] = verdict.equivalent;
  j["bound"] = verdict.bound;
  if (verdict.counter_model)
    j["counter_model"] = verdict.counter_model->describe();
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_prompt(const RunConfig& cfg, const std::string& diagrams_path,
               const std::string& levels_arg, const std::string& out) {
  require_file(diagrams_path);
  if (cfg.models.empty())
    throw pip::ValidationError(
        "no models configured; supply --models or a config file with a "
        "'models' array");
  json darr = json::parse(slurp(diagrams_path));
  std::vector<pip::vlm::DiagramRef> diagrams;
  for (const auto& d : darr) {
    pip::vlm::DiagramRef ref;
    ref.annotation_id = d.at("annotation_id").get<std::string>();
    ref.image_uri = d.value("image_uri", "");
    if (d.contains("image_file")) {
      std::string file = d["image_file"].get<std::string>();
      require_file(file);
      ref.image_bytes = slurp(file);
    }
    diagrams.push_back(std::move(ref));
  }

  std::vector<pip::anno::Level> levels;
  if (levels_arg == "all") {
    levels = {pip::anno::Level::Morphological, pip::anno::Level::Indexical,
              pip::anno::Level::Symbolic};
  } else {
    std::istringstream in(levels_arg);
    std::string name;
    while (std::getline(in, name, ','))
      levels.push_back(pip::anno::level_from_name(name));
  }

  auto records =
      pip::vlm::run_session(diagrams, levels, cfg.models, cfg.parallel);
  std::string text = pip::vlm::records_to_json(records);
  if (!out.empty())
    spill(out, text);
  else
    std::cout << text << "\n";
  size_t failed = 0;
  for (const auto& r : records) failed += r.failed ? 1 : 0;
  std::cerr << records.size() << " records, " << failed << " failed\n";
  return 0;
}

int cmd_score(const std::string& session_path, bool auto_symbolic,
              const std::string& gt_path, int bound, const std::string& out) {
  require_file(session_path);
  auto records = pip::vlm::records_from_json(slurp(session_path));

  if (auto_symbolic) {
    if (gt_path.empty())
      throw pip::ValidationError("--auto-symbolic requires --gt <eg-file>");
    require_file(gt_path);
    auto graph = pip::eg::parse_eg(slurp(gt_path));
    for (auto& rec : records) {
      if (rec.prompt.level != pip::anno::Level::Symbolic || rec.score ||
          rec.failed)
        continue;
      auto suggestion =
          pip::vlm::auto_score_symbolic(rec.response_text, graph, bound);
      rec = pip::vlm::score_response(rec, suggestion.score,
                                     pip::vlm::ScoreSource::AutoSuggested);
      std::cerr << rec.prompt.diagram.annotation_id << ": auto-suggested "
                << suggestion.score << " (" << suggestion.rationale << ")\n";
    }
    if (!out.empty()) spill(out, pip::vlm::records_to_json(records));
  }

  auto table = pip::vlm::aggregate_scores(records);
  ordered_json j;
  ordered_json per_model = ordered_json::object();
  for (const auto& [model, per_level] : table.per_model_level) {
    ordered_json row;
    for (const auto& [level, sum] : per_level)
      row[pip::anno::level_name(level)] = sum;
    row["total"] = table.totals.at(model);
    per_model[model] = std::move(row);
  }
  j["per_model"] = std::move(per_model);
  j["maximum"] = table.maximum;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_export_rdf(const RunConfig& cfg, const std::string& annotations_path,
                   const std::string& format, const std::string& out) {
  require_file(annotations_path);
  auto page = pip::anno::parse_annotation_page(slurp(annotations_path));
  auto ts = pip::kg::annotations_to_triples(page, namespaces_for(cfg));
  auto report = pip::kg::validate_graph(ts);
  if (!report.ok()) {
    std::string msg = "graph validation failed:";
    for (const auto& v : report.violations) msg += " " + v + ";";
    throw pip::ValidationError(msg);
  }
  pip::kg::RdfFormat fmt = format == "ntriples" ? pip::kg::RdfFormat::NTriples
                                                : pip::kg::RdfFormat::Turtle;
  std::string text = pip::kg::serialize(ts, fmt);
  if (!out.empty())
    spill(out, text);
  else
    std::cout << text;
  std::cerr << ts.triples.size() << " triples exported\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peirce-manuscript processing toolkit"};
  app.require_subcommand(0, 1);

  RunConfig cfg;
  std::string config_path;
  bool json_errors = false;
  bool show_config = false;
  app.add_option("--config", config_path, "JSON config file");
  app.add_flag("--json", json_errors, "machine-readable errors on stderr");
  app.add_flag("--show-config", show_config,
               "print the effective configuration and exit");
  app.add_option("--out-root", cfg.output_root, "output root directory");
  app.add_option("--parallel", cfg.parallel, "worker thread count");
  app.add_option("--seed", cfg.seed, "random seed");

  // ingest
  std::string manifests, blank_regex;
  bool skip_fetch = false;
  auto* ingest = app.add_subcommand("ingest", "parse manifests, filter blanks, fetch images");
  ingest->add_option("--manifests", manifests, "manifest file or directory")->required();
  ingest->add_option("--out", cfg.output_root, "output directory");
  ingest->add_option("--blank-regex", cfg.blank_regex, "extra blank-label pattern");
  ingest->add_flag("--no-fetch", skip_fetch, "skip image downloads");

  // stats
  std::string stats_out;
  auto* stats = app.add_subcommand("stats", "corpus statistics CSV");
  stats->add_option("--manifests", manifests, "manifest file or directory")->required();
  stats->add_option("--out", stats_out, "CSV output path (default stdout)");
  stats->add_option("--blank-regex", cfg.blank_regex, "extra blank-label pattern");

  // classify
  std::string features, model_path = "model.json";
  auto* classify = app.add_subcommand("classify", "page classification");
  classify->require_subcommand(1);
  auto* train = classify->add_subcommand("train", "fit a model");
  train->add_option("--features", features, "feature JSONL")->required();
  train->add_option("--out", model_path, "model output path");
  auto* predict = classify->add_subcommand("predict", "label feature vectors");
  predict->add_option("--features", features, "feature JSONL")->required();
  predict->add_option("--model", model_path, "trained model path")->required();
  auto* crossval = classify->add_subcommand("crossval", "k-fold cross-validation");
  crossval->add_option("--features", features, "feature JSONL")->required();
  crossval->add_option("--k", cfg.k, "fold count");
  crossval->add_option("--seed", cfg.seed, "fold assignment seed");

  // detect-eval
  std::string pred_path, gt_path;
  double report_threshold = 0;
  auto* detect_eval = app.add_subcommand("detect-eval", "detection metrics");
  detect_eval->add_option("--pred", pred_path, "prediction JSONL")->required();
  detect_eval->add_option("--gt", gt_path, "ground-truth JSONL")->required();
  detect_eval->add_option("--iou", cfg.iou_threshold, "IoU threshold");
  auto* thr_opt = detect_eval->add_option("--report-threshold", report_threshold,
                                          "confidence cutoff for TP/FP/FN counts");

  // annotate
  std::string detections_path, manifest_path, annotate_out, embed_out;
  std::string page_uri = "https://example.org/pip/annotations/page-1";
  auto* annotate = app.add_subcommand("annotate", "detections to JSON-LD annotations");
  annotate->add_option("--detections", detections_path, "detection JSONL")->required();
  annotate->add_option("--manifest", manifest_path, "IIIF manifest file")->required();
  annotate->add_option("--out", annotate_out, "annotation page output")->required();
  annotate->add_option("--embed", embed_out, "also write the manifest with the page embedded");
  annotate->add_option("--page-uri", page_uri, "annotation page id");

  // eg
  std::string eg_file, eg_lhs, eg_rhs, eg_syntax = "unicode";
  int bound = 3;
  auto* eg_cmd = app.add_subcommand("eg", "existential graph logic");
  eg_cmd->require_subcommand(1);
  auto* translate = eg_cmd->add_subcommand("translate", "graph to formula");
  translate->add_option("file", eg_file, "EG s-expression file")->required();
  translate->add_option("--syntax", eg_syntax, "unicode | ascii | latex");
  auto* check = eg_cmd->add_subcommand("check", "bounded equivalence check");
  check->add_option("lhs", eg_lhs, "EG file, formula file or formula")->required();
  check->add_option("rhs", eg_rhs, "EG file, formula file or formula")->required();
  check->add_option("--bound", bound, "maximum domain size");

  // prompt
  std::string diagrams_path, levels_arg = "all", prompt_out, models_path;
  auto* prompt = app.add_subcommand("prompt", "query vision-language models");
  prompt->add_option("--diagrams", diagrams_path, "diagram list JSON")->required();
  prompt->add_option("--models", models_path, "model config JSON (array)");
  prompt->add_option("--levels", levels_arg, "all or comma-separated level names");
  prompt->add_option("--out", prompt_out, "session records output");

  // score
  std::string session_path, gt_eg_path, score_out;
  bool auto_symbolic = false;
  auto* score = app.add_subcommand("score", "aggregate rubric scores");
  score->add_option("--session", session_path, "session records JSON")->required();
  score->add_flag("--auto-symbolic", auto_symbolic,
                  "suggest symbolic-level scores from a ground-truth graph");
  score->add_option("--gt", gt_eg_path, "ground-truth EG file");
  score->add_option("--bound", bound, "model-checking domain bound");
  score->add_option("--out", score_out, "rescored session output");

  // export-rdf
  std::string annotations_path, rdf_format = "turtle", rdf_out;
  auto* export_rdf = app.add_subcommand("export-rdf", "annotations to RDF");
  export_rdf->add_option("--annotations", annotations_path, "annotation page JSON-LD")->required();
  export_rdf->add_option("--format", rdf_format, "turtle | ntriples")
      ->check(CLI::IsMember({"turtle", "ntriples"}));
  export_rdf->add_option("--out", rdf_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (!config_path.empty()) merge_config_file(cfg, config_path, app);
    if (!models_path.empty()) {
      require_file(models_path);
      cfg.models = parse_models(json::parse(slurp(models_path)));
    }
    if (show_config) {
      std::cout << effective_config(cfg).dump(2) << "\n";
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 1;
    }

    if (*ingest) return cmd_ingest(cfg, manifests, skip_fetch);
    if (*stats) return cmd_stats(cfg, manifests, stats_out);
    if (*train) return cmd_classify_train(cfg, features, model_path);
    if (*predict) return cmd_classify_predict(features, model_path);
    if (*crossval) return cmd_classify_crossval(cfg, features);
    if (*detect_eval)
      return cmd_detect_eval(cfg, pred_path, gt_path, report_threshold,
                             thr_opt->count() > 0);
    if (*annotate)
      return cmd_annotate(cfg, detections_path, manifest_path, annotate_out,
                          embed_out, page_uri);
    if (*translate) return cmd_eg_translate(eg_file, eg_syntax);
    if (*check) return cmd_eg_check(eg_lhs, eg_rhs, bound);
    if (*prompt) return cmd_prompt(cfg, diagrams_path, levels_arg, prompt_out);
    if (*score)
      return cmd_score(session_path, auto_symbolic, gt_eg_path, bound,
                       score_out);
    if (*export_rdf)
      return cmd_export_rdf(cfg, annotations_path, rdf_format, rdf_out);
    std::cerr << app.help();
    return 1;
  } catch (const pip::Error& e) {
    const char* kind = nullptr;
    int code = 1;
    switch (e.kind()) {
      case pip::ErrorKind::Parse: kind = "parse"; break;
      case pip::ErrorKind::Validation: kind = "validation"; break;
      case pip::ErrorKind::Capacity: kind = "capacity"; break;
      case pip::ErrorKind::Io: kind = "io"; code = 2; break;
      case pip::ErrorKind::Transport: kind = "transport"; code = 2; break;
    }
    if (json_errors) {
      ordered_json err{{"error", kind}, {"message", e.what()}};
      std::cerr << err.dump() << "\n";
    } else {
      std::cerr << "error (" << kind << "): " << e.what() << "\n";
    }
    return code;
  } catch (const std::exception& e) {
    if (json_errors) {
      ordered_json err{{"error", "internal"}, {"message", e.what()}};
      std::cerr << err.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return 1;
  }
}
