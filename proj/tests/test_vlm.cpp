#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pip/errors.hpp"
#include "pip/vlm.hpp"

using namespace pip;
using namespace pip::vlm;
using nlohmann::json;

namespace {

struct StubServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  StubServer() {
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~StubServer() {
    server.stop();
    thread.join();
  }
  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port) +
           "/v1/chat/completions";
  }
};

void reply_with(httplib::Response& res, const std::string& content) {
  json body{{"choices",
             json::array({{{"message", {{"role", "assistant"},
                                        {"content", content}}}}})}};
  res.set_content(body.dump(), "application/json");
}

ModelConfig fast_config(const StubServer& srv,
                        const std::string& name = "stub-model") {
  ModelConfig cfg;
  cfg.model_name = name;
  cfg.endpoint = srv.endpoint();
  cfg.backoff_base_ms = 1;
  return cfg;
}

DiagramRef make_diagram(const std::string& id = "d1") {
  DiagramRef d;
  d.annotation_id = id;
  d.image_uri = "https://lib.example/images/iiif/x/10,20,30,40/full/0/default.jpg";
  return d;
}

// "There is a man who is not both wounded and disgraced."
const char* kEq1Graph = R"(
  (sheet (lig x)
         (spot Man x)
         (cut (spot Wounded x) (spot Disgraced x)))
)";

}  // namespace

TEST_CASE("prompt templates carry the exact question texts") {
  CHECK(prompt_template(Level::Morphological) ==
        "How many and what kind of elements (e.g., words, lines, arcs, nodes, "
        "shapes, etc.) are present in the image?");
  CHECK(prompt_template(Level::Indexical) ==
        "Is there a relationship between the elements present in the image? "
        "Which elements are connected to each other?");
  const std::string& symbolic = prompt_template(Level::Symbolic);
  CHECK(symbolic.rfind("In Peirce’s diagrammatic logic, a closed curve "
                       "called a cut represents logical negation.", 0) == 0);
  CHECK(symbolic.find("Sheet of Assertion") != std::string::npos);
  CHECK(symbolic.find("translate its meaning into a logical statement") !=
        std::string::npos);
  CHECK(prompt_template_id(Level::Symbolic) == "symbolic-v1");
}

TEST_CASE("build_prompt copies the template and diagram") {
  auto p = build_prompt(Level::Indexical, make_diagram());
  CHECK(p.level == Level::Indexical);
  CHECK(p.template_id == "indexical-v1");
  CHECK(p.rendered_text == prompt_template(Level::Indexical));
  CHECK(p.diagram.annotation_id == "d1");
}

TEST_CASE("query_vlm: request shape and verbatim response capture") {
  StubServer srv;
  json seen_request;
  std::string seen_auth;
  srv.server.Post("/v1/chat/completions",
                  [&](const httplib::Request& req, httplib::Response& res) {
                    seen_request = json::parse(req.body);
                    seen_auth = req.get_header_value("Authorization");
                    reply_with(res, "  The diagram shows a cut.\n");
                  });
  setenv("PIP_TEST_TOKEN", "secret-token-123", 1);
  auto cfg = fast_config(srv, "gpt-4o");
  cfg.credential_env = "PIP_TEST_TOKEN";
  cfg.temperature = 0.0;

  auto rec = query_vlm(cfg, build_prompt(Level::Symbolic, make_diagram()));
  CHECK(rec.model_name == "gpt-4o");
  CHECK(rec.response_text == "  The diagram shows a cut.\n");  // verbatim
  CHECK(rec.retries == 0);
  CHECK(!rec.failed);
  CHECK(rec.latency_ms > 0);
  CHECK(!rec.timestamp.empty());

  CHECK(seen_auth == "Bearer secret-token-123");
  CHECK(seen_request["model"] == "gpt-4o");
  CHECK(seen_request["temperature"] == 0.0);
  REQUIRE(seen_request["messages"].size() == 1);
  CHECK(seen_request["messages"][0]["role"] == "user");
  const auto& content = seen_request["messages"][0]["content"];
  REQUIRE(content.size() == 2);
  CHECK(content[0]["type"] == "text");
  CHECK(content[0]["text"] == prompt_template(Level::Symbolic));
  CHECK(content[1]["type"] == "image_url");
  CHECK(content[1]["image_url"]["url"] == make_diagram().image_uri);
  unsetenv("PIP_TEST_TOKEN");
}

TEST_CASE("query_vlm: raw image bytes are sent as a base64 data URL") {
  StubServer srv;
  std::string seen_url;
  srv.server.Post("/v1/chat/completions",
                  [&](const httplib::Request& req, httplib::Response& res) {
                    auto body = json::parse(req.body);
                    seen_url = body["messages"][0]["content"][1]["image_url"]
                                   ["url"].get<std::string>();
                    reply_with(res, "ok");
                  });
  DiagramRef d;
  d.annotation_id = "d1";
  d.image_bytes = "ab";  // base64 "YWI="
  query_vlm(fast_config(srv), build_prompt(Level::Morphological, d));
  CHECK(seen_url == "data:image/jpeg;base64,YWI=");
}

TEST_CASE("query_vlm: 503 twice then success records two retries") {
  StubServer srv;
  std::atomic<int> hits{0};
  srv.server.Post("/v1/chat/completions",
                  [&](const httplib::Request&, httplib::Response& res) {
                    if (hits.fetch_add(1) < 2)
                      res.status = 503;
                    else
                      reply_with(res, "recovered");
                  });
  auto rec = query_vlm(fast_config(srv),
                       build_prompt(Level::Morphological, make_diagram()));
  CHECK(rec.response_text == "recovered");
  CHECK(rec.retries == 2);
  CHECK(hits.load() == 3);
}

TEST_CASE("query_vlm: persistent 500 exhausts attempts") {
  StubServer srv;
  std::atomic<int> hits{0};
  srv.server.Post("/v1/chat/completions",
                  [&](const httplib::Request&, httplib::Response& res) {
                    hits.fetch_add(1);
                    res.status = 500;
                  });
  auto cfg = fast_config(srv);
  cfg.max_attempts = 3;
  CHECK_THROWS_AS(
      query_vlm(cfg, build_prompt(Level::Morphological, make_diagram())),
      TransportError);
  CHECK(hits.load() == 3);
}

TEST_CASE("query_vlm: auth failure is immediate and never leaks the token") {
  StubServer srv;
  std::atomic<int> hits{0};
  srv.server.Post("/v1/chat/completions",
                  [&](const httplib::Request&, httplib::Response& res) {
                    hits.fetch_add(1);
                    res.status = 401;
                  });
  setenv("PIP_TEST_TOKEN", "super-secret-value", 1);
  auto cfg = fast_config(srv);
  cfg.credential_env = "PIP_TEST_TOKEN";
  try {
    query_vlm(cfg, build_prompt(Level::Morphological, make_diagram()));
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    std::string msg = e.what();
    CHECK(msg.find("401") != std::string::npos);
    CHECK(msg.find("super-secret-value") == std::string::npos);
    CHECK(msg.find("PIP_TEST_TOKEN") == std::string::npos);
  }
  CHECK(hits.load() == 1);  // no retry on auth failures
  unsetenv("PIP_TEST_TOKEN");
}

TEST_CASE("query_vlm: connection errors are retried then reported") {
  ModelConfig cfg;
  cfg.model_name = "m";
  cfg.endpoint = "http://127.0.0.1:9/v1/chat/completions";  // port 9: discard
  cfg.max_attempts = 2;
  cfg.backoff_base_ms = 1;
  CHECK_THROWS_AS(
      query_vlm(cfg, build_prompt(Level::Morphological, make_diagram())),
      TransportError);
}

TEST_CASE("query_vlm: malformed reply bodies") {
  StubServer srv;
  srv.server.Post("/v1/chat/completions",
                  [](const httplib::Request&, httplib::Response& res) {
                    res.set_content("not json at all", "text/plain");
                  });
  CHECK_THROWS_AS(
      query_vlm(fast_config(srv),
                build_prompt(Level::Morphological, make_diagram())),
      TransportError);

  StubServer srv2;
  srv2.server.Post("/v1/chat/completions",
                   [](const httplib::Request&, httplib::Response& res) {
                     res.set_content(R"({"choices":[]})", "application/json");
                   });
  CHECK_THROWS_WITH_AS(
      query_vlm(fast_config(srv2),
                build_prompt(Level::Morphological, make_diagram())),
      doctest::Contains("choices[0].message.content"), TransportError);
}

TEST_CASE("run_session: 5 diagrams x 3 levels, ordered records") {
  StubServer srv;
  srv.server.Post("/v1/chat/completions",
                  [](const httplib::Request& req, httplib::Response& res) {
                    auto body = json::parse(req.body);
                    reply_with(res, "echo: " +
                                        body["messages"][0]["content"][0]["text"]
                                            .get<std::string>().substr(0, 5));
                  });
  std::vector<DiagramRef> diagrams;
  for (int i = 0; i < 5; ++i) diagrams.push_back(make_diagram("d" + std::to_string(i)));
  std::vector<Level> levels{Level::Morphological, Level::Indexical,
                            Level::Symbolic};
  auto records = run_session(diagrams, levels, {fast_config(srv)}, 4);
  REQUIRE(records.size() == 15);
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].prompt.diagram.annotation_id ==
          "d" + std::to_string(i / 3));
    CHECK(records[i].prompt.level == levels[i % 3]);
    CHECK(!records[i].failed);
    CHECK(records[i].response_text.rfind("echo: ", 0) == 0);
  }
}

TEST_CASE("run_session: failures become failed records, session continues") {
  StubServer srv;
  srv.server.Post("/v1/chat/completions",
                  [](const httplib::Request& req, httplib::Response& res) {
                    auto body = json::parse(req.body);
                    std::string text = body["messages"][0]["content"][0]["text"];
                    // The indexical prompt always fails.
                    if (text.find("relationship") != std::string::npos)
                      res.status = 500;
                    else
                      reply_with(res, "fine");
                  });
  auto cfg = fast_config(srv);
  cfg.max_attempts = 1;
  auto records = run_session({make_diagram()},
                             {Level::Morphological, Level::Indexical,
                              Level::Symbolic},
                             {cfg}, 2);
  REQUIRE(records.size() == 3);
  CHECK(!records[0].failed);
  CHECK(records[1].failed);
  CHECK(!records[1].error.empty());
  CHECK(!records[2].failed);
}

TEST_CASE("run_session: two models group by model first") {
  StubServer srv;
  srv.server.Post("/v1/chat/completions",
                  [](const httplib::Request& req, httplib::Response& res) {
                    auto body = json::parse(req.body);
                    reply_with(res, body["model"].get<std::string>());
                  });
  auto records = run_session({make_diagram("d0"), make_diagram("d1")},
                             {Level::Symbolic},
                             {fast_config(srv, "m-a"), fast_config(srv, "m-b")},
                             1);
  REQUIRE(records.size() == 4);
  CHECK(records[0].model_name == "m-a");
  CHECK(records[1].model_name == "m-a");
  CHECK(records[2].model_name == "m-b");
  CHECK(records[3].model_name == "m-b");
  CHECK(records[0].prompt.diagram.annotation_id == "d0");
  CHECK(records[1].prompt.diagram.annotation_id == "d1");
}

TEST_CASE("run_session: input validation") {
  CHECK_THROWS_AS(run_session({}, {Level::Symbolic}, {ModelConfig{}}),
                  ValidationError);
  CHECK_THROWS_AS(run_session({make_diagram()}, {}, {ModelConfig{}}),
                  ValidationError);
  CHECK_THROWS_AS(run_session({make_diagram()}, {Level::Symbolic}, {}),
                  ValidationError);
}

TEST_CASE("score_response validates the rubric range") {
  InterpretationRecord rec;
  auto scored = score_response(rec, 2, ScoreSource::Manual);
  CHECK(*scored.score == 2);
  CHECK(scored.score_source == ScoreSource::Manual);
  CHECK(!rec.score);  // input untouched
  CHECK_THROWS_AS(score_response(rec, 3, ScoreSource::Manual), ValidationError);
  CHECK_THROWS_AS(score_response(rec, -1, ScoreSource::Manual), ValidationError);
}

TEST_CASE("auto_score_symbolic: equivalent formula scores 2") {
  auto graph = eg::parse_eg(kEq1Graph);
  AutoScore s = auto_score_symbolic(
      "The diagram translates to ∃x (Man(x) ∧ "
      "¬(Wounded(x) ∧ Disgraced(x))), i.e. some man is not both.",
      graph);
  CHECK(s.score == 2);
  CHECK(s.extracted.has_value());
  CHECK(s.rationale.find("equivalent") != std::string::npos);
}

TEST_CASE("auto_score_symbolic: ASCII and LaTeX-token spellings also score 2") {
  auto graph = eg::parse_eg(kEq1Graph);
  CHECK(auto_score_symbolic(
            "Answer: exists x. Man(x) & ~(Wounded(x) & Disgraced(x))", graph)
            .score == 2);
  CHECK(auto_score_symbolic(
            "So we get \\exists x (Man(x) \\land \\lnot(Wounded(x) \\land "
            "Disgraced(x)))",
            graph)
            .score == 2);
}

TEST_CASE("auto_score_symbolic: same predicates, wrong structure scores 1") {
  auto graph = eg::parse_eg(kEq1Graph);
  // The scope of the negation is wrong: no man is wounded-and-disgraced.
  AutoScore s = auto_score_symbolic(
      "~ exists x (Man(x) & Wounded(x) & Disgraced(x))", graph);
  CHECK(s.score == 1);
  CHECK(s.rationale.find("counter-model") != std::string::npos);
}

TEST_CASE("auto_score_symbolic: different predicates or no formula score 0") {
  auto graph = eg::parse_eg(kEq1Graph);
  CHECK(auto_score_symbolic("exists x. Cat(x) & ~Dog(x)", graph).score == 0);

  AutoScore prose = auto_score_symbolic(
      "There exists a man inside an oval. It is hard to say more.", graph);
  CHECK(prose.score == 0);
  CHECK(!prose.extracted.has_value());
  CHECK(prose.rationale.find("no parseable formula") != std::string::npos);

  CHECK(auto_score_symbolic("", graph).score == 0);
}

TEST_CASE("auto_score_symbolic: formula embedded mid-prose is found") {
  auto graph = eg::parse_eg("(sheet (cut))");  // an empty cut reads as falsum
  AutoScore s = auto_score_symbolic(
      "An empty cut denies the sheet, so the content is ¬⊤ "
      "by convention.",
      graph);
  CHECK(s.score == 2);
}

TEST_CASE("aggregate_scores reproduces the published per-level sums") {
  // One model, three diagrams-by-level groups summing to 7/9/9 = 25 of 30.
  // Five diagrams x three levels; per-level scores chosen to hit the sums.
  const int morph[5] = {2, 1, 2, 1, 1};   // 7
  const int index[5] = {2, 2, 2, 2, 1};   // 9
  const int symb[5] = {1, 2, 2, 2, 2};    // 9
  std::vector<InterpretationRecord> records;
  for (int d = 0; d < 5; ++d) {
    auto add = [&](Level lvl, int sc) {
      InterpretationRecord rec;
      rec.model_name = "gpt-4o";
      rec.prompt.level = lvl;
      rec.prompt.diagram.annotation_id = "d" + std::to_string(d);
      rec.score = sc;
      records.push_back(rec);
    };
    add(Level::Morphological, morph[d]);
    add(Level::Indexical, index[d]);
    add(Level::Symbolic, symb[d]);
  }
  auto table = aggregate_scores(records);
  CHECK(table.per_model_level["gpt-4o"][Level::Morphological] == 7);
  CHECK(table.per_model_level["gpt-4o"][Level::Indexical] == 9);
  CHECK(table.per_model_level["gpt-4o"][Level::Symbolic] == 9);
  CHECK(table.totals["gpt-4o"] == 25);
  CHECK(table.maximum == 30);  // 5 diagrams x 3 levels x 2
}

TEST_CASE("aggregate_scores rejects unscored records and names them") {
  InterpretationRecord rec;
  rec.model_name = "m";
  rec.prompt.level = Level::Indexical;
  rec.prompt.diagram.annotation_id = "d9";
  CHECK_THROWS_WITH_AS(aggregate_scores({rec}),
                       doctest::Contains("m/d9/Indexical"), ValidationError);
}

TEST_CASE("records round-trip through JSON") {
  InterpretationRecord rec;
  rec.model_name = "gpt-4o";
  rec.endpoint = "http://127.0.0.1:1234/v1/chat/completions";
  rec.prompt = build_prompt(Level::Symbolic, make_diagram("d7"));
  rec.response_text = "∃x Man(x) — with a dash and \"quotes\"";
  rec.latency_ms = 123.5;
  rec.retries = 1;
  rec.timestamp = "2024-05-01T12:00:00Z";
  rec.score = 1;
  rec.score_source = ScoreSource::AutoSuggested;

  InterpretationRecord failed;
  failed.model_name = "other";
  failed.prompt = build_prompt(Level::Morphological, make_diagram("d8"));
  failed.failed = true;
  failed.error = "HTTP 500";

  auto back = records_from_json(records_to_json({rec, failed}));
  REQUIRE(back.size() == 2);
  CHECK(back[0].model_name == rec.model_name);
  CHECK(back[0].endpoint == rec.endpoint);
  CHECK(back[0].prompt.level == Level::Symbolic);
  CHECK(back[0].prompt.template_id == "symbolic-v1");
  CHECK(back[0].prompt.diagram.annotation_id == "d7");
  CHECK(back[0].response_text == rec.response_text);
  CHECK(back[0].latency_ms == rec.latency_ms);
  CHECK(back[0].retries == 1);
  CHECK(*back[0].score == 1);
  CHECK(back[0].score_source == ScoreSource::AutoSuggested);
  CHECK(back[1].failed);
  CHECK(back[1].error == "HTTP 500");
  CHECK(!back[1].score);

  CHECK_THROWS_AS(records_from_json("[{]"), ParseError);
}
