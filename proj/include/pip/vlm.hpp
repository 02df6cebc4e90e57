#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pip/annotations.hpp"
#include "pip/eg.hpp"

namespace pip::vlm {

using anno::Level;

struct DiagramRef {
  std::string annotation_id;
  std::string image_uri;    // IIIF region URL, or empty when inline
  std::string image_bytes;  // raw bytes, base64-inlined when non-empty
};

struct PromptRecord {
  Level level = Level::Morphological;
  std::string template_id;
  std::string rendered_text;
  DiagramRef diagram;
};

// The exact question template for each semiotic level.
const std::string& prompt_template(Level level);
std::string prompt_template_id(Level level);

PromptRecord build_prompt(Level level, const DiagramRef& diagram);

struct ModelConfig {
  std::string model_name;
  std::string endpoint;         // e.g. http://host:port/v1/chat/completions
  std::string credential_env;   // env var holding the bearer token, optional
  double temperature = 0.0;
  int max_attempts = 3;
  int backoff_base_ms = 1000;   // exponential, factor 2, full jitter
  int rate_limit_per_minute = 0;  // 0 = unlimited
};

enum class ScoreSource { Manual, AutoSuggested };

struct InterpretationRecord {
  PromptRecord prompt;
  std::string model_name;
  std::string endpoint;
  std::string response_text;  // verbatim, whitespace included
  double latency_ms = 0;
  int retries = 0;
  std::string timestamp;  // UTC ISO-8601
  bool failed = false;
  std::string error;
  std::optional<int> score;  // 0, 1 or 2
  ScoreSource score_source = ScoreSource::Manual;
};

// One chat-completions request carrying the prompt text and the image.
// Retries transient failures (5xx, connection errors) with exponential
// backoff; auth failures and other 4xx are not retried. The credential is
// read from the environment and never appears in errors or logs.
InterpretationRecord query_vlm(const ModelConfig& config,
                               const PromptRecord& prompt);

// Cartesian product diagram x level x model, output ordered by
// (model, diagram, level). Per-request failures become failed records; the
// session continues.
std::vector<InterpretationRecord> run_session(
    const std::vector<DiagramRef>& diagrams, const std::vector<Level>& levels,
    const std::vector<ModelConfig>& models, int max_parallel = 1);

InterpretationRecord score_response(const InterpretationRecord& record,
                                    int score, ScoreSource source);

struct AutoScore {
  int score = 0;  // 2 equivalent, 1 same predicates, 0 otherwise
  std::string rationale;
  std::optional<eg::Formula> extracted;
};

// Extracts the first parseable formula from free-form response text (after
// normalizing Unicode and LaTeX-token connectives) and compares it to the
// endoporeutic reading of the ground-truth graph by bounded model checking.
AutoScore auto_score_symbolic(const std::string& response_text,
                              const eg::EGraph& ground_truth, int bound = 3);

struct ScoreTable {
  // model -> level -> sum of scores
  std::map<std::string, std::map<Level, int>> per_model_level;
  std::map<std::string, int> totals;
  int maximum = 0;  // diagrams x levels x 2
};

ScoreTable aggregate_scores(const std::vector<InterpretationRecord>& records);

// JSON (de)serialization of session records, for the CLI.
std::string records_to_json(const std::vector<InterpretationRecord>& records);
std::vector<InterpretationRecord> records_from_json(const std::string& text);

}  // namespace pip::vlm
