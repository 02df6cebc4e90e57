#include "pip/vlm.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pip/errors.hpp"

namespace pip::vlm {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

namespace {

const std::string kMorphological =
    "How many and what kind of elements (e.g., words, lines, arcs, nodes, "
    "shapes, etc.) are present in the image?";

const std::string kIndexical =
    "Is there a relationship between the elements present in the image? "
    "Which elements are connected to each other?";

const std::string kSymbolic =
    "In Peirce’s diagrammatic logic, a closed curve called a cut "
    "represents logical negation. Elements inside the same region are "
    "interpreted conjunctively (i.e., asserted together). Elements placed "
    "directly on the background (the Sheet of Assertion) are considered "
    "true. A cut around propositions denies them. Nested cuts represent "
    "nested negation. Lines may indicate identity or existential "
    "quantification.\n\nBased on these principles, interpret the diagram and "
    "translate its meaning into a logical statement. If this is not "
    "possible, provide a clear explanation in natural language.";

}  // namespace

const std::string& prompt_template(Level level) {
  switch (level) {
    case Level::Morphological:
      return kMorphological;
    case Level::Indexical:
      return kIndexical;
    case Level::Symbolic:
      return kSymbolic;
  }
  throw ValidationError("invalid level");
}

std::string prompt_template_id(Level level) {
  switch (level) {
    case Level::Morphological:
      return "morphological-v1";
    case Level::Indexical:
      return "indexical-v1";
    case Level::Symbolic:
      return "symbolic-v1";
  }
  throw ValidationError("invalid level");
}

PromptRecord build_prompt(Level level, const DiagramRef& diagram) {
  PromptRecord rec;
  rec.level = level;
  rec.template_id = prompt_template_id(level);
  rec.rendered_text = prompt_template(level);
  rec.diagram = diagram;
  return rec;
}

// ---------------------------------------------------------------------------
// HTTP client
// ---------------------------------------------------------------------------

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ValidationError("endpoint is not an absolute URL: " + url);
  size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string base64_encode(const std::string& bytes) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  size_t i = 0;
  while (i + 2 < bytes.size()) {
    uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                 (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                 static_cast<unsigned char>(bytes[i + 2]);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += alphabet[v & 63];
    i += 3;
  }
  if (i < bytes.size()) {
    uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    bool two = i + 1 < bytes.size();
    if (two) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += two ? alphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string utc_now_iso8601() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json build_request_body(const ModelConfig& config, const PromptRecord& prompt) {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", prompt.rendered_text}});
  std::string url = prompt.diagram.image_uri;
  if (!prompt.diagram.image_bytes.empty())
    url = "data:image/jpeg;base64," + base64_encode(prompt.diagram.image_bytes);
  if (!url.empty())
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
  return json{{"model", config.model_name},
              {"temperature", config.temperature},
              {"messages", json::array({json{{"role", "user"},
                                             {"content", content}}})}};
}

}  // namespace

InterpretationRecord query_vlm(const ModelConfig& config,
                               const PromptRecord& prompt) {
  InterpretationRecord rec;
  rec.prompt = prompt;
  rec.model_name = config.model_name;
  rec.endpoint = config.endpoint;
  rec.timestamp = utc_now_iso8601();

  std::string token;
  if (!config.credential_env.empty()) {
    const char* env = std::getenv(config.credential_env.c_str());
    if (env) token = env;
  }

  auto [host, path] = split_url(config.endpoint);
  std::string body = build_request_body(config, prompt).dump();

  std::mt19937_64 rng(std::hash<std::string>{}(config.endpoint + prompt.template_id));
  std::string attempt_log;
  auto start = std::chrono::steady_clock::now();
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    if (attempt > 0) {
      rec.retries = attempt;
      int cap = config.backoff_base_ms << (attempt - 1);
      std::uniform_int_distribution<int> jitter(0, cap);
      std::this_thread::sleep_for(std::chrono::milliseconds(jitter(rng)));
    }
    httplib::Client client(host);
    client.set_connection_timeout(30);
    client.set_read_timeout(300);
    httplib::Headers headers{{"Content-Type", "application/json"}};
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      attempt_log += "attempt " + std::to_string(attempt + 1) +
                     ": connection error (" + httplib::to_string(res.error()) +
                     "); ";
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      // The token value itself must never reach an error message.
      throw TransportError("credential error (HTTP " +
                           std::to_string(res->status) + ") from " +
                           config.endpoint);
    }
    if (res->status >= 500 || res->status == 429) {
      attempt_log += "attempt " + std::to_string(attempt + 1) + ": HTTP " +
                     std::to_string(res->status) + "; ";
      continue;
    }
    if (res->status != 200)
      throw TransportError("HTTP " + std::to_string(res->status) + " from " +
                           config.endpoint);
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::parse_error&) {
      throw TransportError("non-JSON response from " + config.endpoint +
                           ": " + res->body.substr(0, 200));
    }
    try {
      rec.response_text =
          reply.at("choices").at(0).at("message").at("content")
              .get<std::string>();
    } catch (const json::exception&) {
      throw TransportError("response from " + config.endpoint +
                           " lacks choices[0].message.content");
    }
    rec.latency_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return rec;
  }
  throw TransportError("exhausted " + std::to_string(config.max_attempts) +
                       " attempts against " + config.endpoint + ": " +
                       attempt_log);
}

std::vector<InterpretationRecord> run_session(
    const std::vector<DiagramRef>& diagrams, const std::vector<Level>& levels,
    const std::vector<ModelConfig>& models, int max_parallel) {
  if (diagrams.empty() || levels.empty() || models.empty())
    throw ValidationError("run_session requires >= 1 diagram, level and model");
  if (max_parallel < 1)
    throw ValidationError("run_session requires max_parallel >= 1");

  struct Task {
    const ModelConfig* model;
    const DiagramRef* diagram;
    Level level;
  };
  std::vector<Task> tasks;
  for (const auto& model : models)
    for (const auto& diagram : diagrams)
      for (Level level : levels) tasks.push_back({&model, &diagram, level});

  std::vector<InterpretationRecord> records(tasks.size());

  // Per-endpoint rate limiting: a minimum interval between request starts.
  std::mutex rate_mutex;
  std::map<std::string, std::chrono::steady_clock::time_point> next_allowed;
  auto wait_for_slot = [&](const ModelConfig& model) {
    if (model.rate_limit_per_minute <= 0) return;
    auto interval =
        std::chrono::milliseconds(60000 / model.rate_limit_per_minute);
    std::chrono::steady_clock::time_point wait_until;
    {
      std::lock_guard lock(rate_mutex);
      auto now = std::chrono::steady_clock::now();
      auto& slot = next_allowed[model.endpoint];
      wait_until = std::max(slot, now);
      slot = wait_until + interval;
    }
    std::this_thread::sleep_until(wait_until);
  };

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      PromptRecord prompt = build_prompt(task.level, *task.diagram);
      try {
        wait_for_slot(*task.model);
        records[i] = query_vlm(*task.model, prompt);
      } catch (const std::exception& e) {
        InterpretationRecord failed;
        failed.prompt = prompt;
        failed.model_name = task.model->model_name;
        failed.endpoint = task.model->endpoint;
        failed.timestamp = utc_now_iso8601();
        failed.failed = true;
        failed.error = e.what();
        records[i] = std::move(failed);
      }
    }
  };
  size_t workers = std::min<size_t>(max_parallel, tasks.size());
  std::vector<std::thread> threads;
  for (size_t i = 0; i < workers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return records;
}

InterpretationRecord score_response(const InterpretationRecord& record,
                                    int score, ScoreSource source) {
  if (score < 0 || score > 2)
    throw ValidationError("score must be 0, 1 or 2, got " +
                          std::to_string(score));
  InterpretationRecord scored = record;
  scored.score = score;
  scored.score_source = source;
  return scored;
}

// ---------------------------------------------------------------------------
// Automatic symbolic scoring
// ---------------------------------------------------------------------------

namespace {

bool formula_is_substantive(const eg::Formula& f) {
  // A bare word parses as a zero-ary atom; prose must not count as a formula.
  switch (f->kind) {
    case eg::NodeKind::Not:
    case eg::NodeKind::And:
    case eg::NodeKind::Equal:
      return true;
    case eg::NodeKind::Exists:
      return true;
    case eg::NodeKind::Atom:
      return !f->args.empty();
    case eg::NodeKind::Truth:
      return false;
  }
  return false;
}

// Every quantified variable must occur in its body; prose like
// "exists a man" otherwise parses as a vacuous quantification.
bool vacuous_quantifier(const eg::Formula& f,
                        const std::string& var_in_scope) {
  switch (f->kind) {
    case eg::NodeKind::Atom:
      for (const auto& a : f->args)
        if (a == var_in_scope) return false;
      return true;
    case eg::NodeKind::Equal:
      return f->lhs != var_in_scope && f->rhs != var_in_scope;
    case eg::NodeKind::Not:
      return vacuous_quantifier(f->left, var_in_scope);
    case eg::NodeKind::And:
      return vacuous_quantifier(f->left, var_in_scope) &&
             vacuous_quantifier(f->right, var_in_scope);
    case eg::NodeKind::Exists:
      if (f->var == var_in_scope) return true;  // shadowed
      return vacuous_quantifier(f->left, var_in_scope);
    default:
      return true;
  }
}

bool has_vacuous_quantifier(const eg::Formula& f) {
  switch (f->kind) {
    case eg::NodeKind::Exists:
      return vacuous_quantifier(f->left, f->var) ||
             has_vacuous_quantifier(f->left);
    case eg::NodeKind::Not:
      return has_vacuous_quantifier(f->left);
    case eg::NodeKind::And:
      return has_vacuous_quantifier(f->left) ||
             has_vacuous_quantifier(f->right);
    default:
      return false;
  }
}

bool could_start_formula(const std::string& text, size_t i) {
  unsigned char c = text[i];
  if (std::isalpha(c) || c == '~' || c == '(' || c == '\\') return true;
  return text.compare(i, 3, "∃") == 0 ||
         text.compare(i, 2, "¬") == 0;
}

std::optional<eg::Formula> extract_formula(const std::string& text) {
  for (size_t i = 0; i < text.size(); ++i) {
    if (!could_start_formula(text, i)) continue;
    if (i > 0 && (std::isalnum(static_cast<unsigned char>(text[i - 1])) ||
                  text[i - 1] == '_'))
      continue;  // mid-word
    try {
      auto [formula, consumed] =
          eg::detail::parse_formula_prefix(text.substr(i));
      (void)consumed;
      if (!formula_is_substantive(formula)) continue;
      if (!eg::detail::is_closed(formula)) continue;
      if (has_vacuous_quantifier(formula)) continue;
      return formula;
    } catch (const Error&) {
      continue;
    }
  }
  return std::nullopt;
}

}  // namespace

AutoScore auto_score_symbolic(const std::string& response_text,
                              const eg::EGraph& ground_truth, int bound) {
  AutoScore result;
  eg::Formula truth = eg_to_formula(ground_truth);
  auto candidate = extract_formula(response_text);
  if (!candidate) {
    result.score = 0;
    result.rationale = "no parseable formula found in the response";
    return result;
  }
  result.extracted = candidate;
  try {
    auto verdict = eg::equivalent_bounded(*candidate, truth, bound);
    if (verdict.equivalent) {
      result.score = 2;
      result.rationale = "equivalent to the ground truth up to domain bound " +
                         std::to_string(verdict.bound);
      return result;
    }
    bool same_predicates =
        eg::predicate_names(*candidate) == eg::predicate_names(truth);
    result.score = same_predicates ? 1 : 0;
    result.rationale =
        (same_predicates
             ? std::string("same predicates but not equivalent; ")
             : std::string("predicate sets differ and not equivalent; ")) +
        "counter-model: " + verdict.counter_model->describe();
  } catch (const Error& e) {
    result.score = 0;
    result.rationale = std::string("comparison failed: ") + e.what();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

ScoreTable aggregate_scores(const std::vector<InterpretationRecord>& records) {
  std::vector<std::string> unscored;
  for (const auto& rec : records)
    if (!rec.score)
      unscored.push_back(rec.model_name + "/" + rec.prompt.diagram.annotation_id +
                         "/" + anno::level_name(rec.prompt.level));
  if (!unscored.empty()) {
    std::string msg = "unscored records:";
    for (const auto& id : unscored) msg += " " + id;
    throw ValidationError(msg);
  }
  ScoreTable table;
  std::set<std::string> diagrams;
  std::set<Level> levels;
  for (const auto& rec : records) {
    table.per_model_level[rec.model_name][rec.prompt.level] += *rec.score;
    table.totals[rec.model_name] += *rec.score;
    diagrams.insert(rec.prompt.diagram.annotation_id);
    levels.insert(rec.prompt.level);
  }
  table.maximum = static_cast<int>(diagrams.size() * levels.size()) * 2;
  return table;
}

// ---------------------------------------------------------------------------
// Record (de)serialization
// ---------------------------------------------------------------------------

std::string records_to_json(const std::vector<InterpretationRecord>& records) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& rec : records) {
    nlohmann::ordered_json j;
    j["model"] = rec.model_name;
    j["endpoint"] = rec.endpoint;
    j["level"] = anno::level_name(rec.prompt.level);
    j["template_id"] = rec.prompt.template_id;
    j["prompt_text"] = rec.prompt.rendered_text;
    j["diagram_id"] = rec.prompt.diagram.annotation_id;
    j["image_uri"] = rec.prompt.diagram.image_uri;
    j["response_text"] = rec.response_text;
    j["latency_ms"] = rec.latency_ms;
    j["retries"] = rec.retries;
    j["timestamp"] = rec.timestamp;
    j["failed"] = rec.failed;
    j["error"] = rec.error;
    if (rec.score) {
      j["score"] = *rec.score;
      j["score_source"] =
          rec.score_source == ScoreSource::Manual ? "manual" : "auto-suggested";
    } else {
      j["score"] = nullptr;
    }
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

std::vector<InterpretationRecord> records_from_json(const std::string& text) {
  json arr;
  try {
    arr = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("session file: ") + e.what());
  }
  std::vector<InterpretationRecord> records;
  for (const auto& j : arr) {
    InterpretationRecord rec;
    rec.model_name = j.at("model").get<std::string>();
    rec.endpoint = j.value("endpoint", "");
    rec.prompt.level = anno::level_from_name(j.at("level").get<std::string>());
    rec.prompt.template_id = j.value("template_id", "");
    rec.prompt.rendered_text = j.value("prompt_text", "");
    rec.prompt.diagram.annotation_id = j.value("diagram_id", "");
    rec.prompt.diagram.image_uri = j.value("image_uri", "");
    rec.response_text = j.value("response_text", "");
    rec.latency_ms = j.value("latency_ms", 0.0);
    rec.retries = j.value("retries", 0);
    rec.timestamp = j.value("timestamp", "");
    rec.failed = j.value("failed", false);
    rec.error = j.value("error", "");
    if (j.contains("score") && !j["score"].is_null()) {
      rec.score = j["score"].get<int>();
      rec.score_source = j.value("score_source", "manual") == "manual"
                             ? ScoreSource::Manual
                             : ScoreSource::AutoSuggested;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace pip::vlm
