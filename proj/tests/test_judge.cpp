#include <doctest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "summjudge/corpus.hpp"
#include "summjudge/judge.hpp"

using namespace summjudge;
using namespace summjudge::judge;
using doctest::Approx;

namespace {

std::string read_snapshot(const std::string& name) {
  std::ifstream in(std::string(SUMMJUDGE_SNAPSHOT_DIR) + "/" + name + ".txt", std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

JudgeConfig fast_config(std::size_t retries = 2) {
  JudgeConfig c;
  c.max_retries = retries;
  c.retry_backoff = std::chrono::milliseconds(0);
  return c;
}

corpus::Corpus small_corpus(std::size_t records) {
  std::vector<corpus::CorpusRecord> rs;
  for (std::size_t i = 0; i < records; ++i) {
    rs.push_back({"r" + std::to_string(i), "Article number " + std::to_string(i) + " says things.",
                  "Reference.", {{"m", "Summary " + std::to_string(i) + "."}}});
  }
  return corpus::make_corpus(std::move(rs));
}

}  // namespace

TEST_CASE("prompts match the pinned snapshots") {
  for (auto protocol : {Protocol::zero_shot, Protocol::chain_of_thought, Protocol::score}) {
    for (auto property : kAllProperties) {
      const std::string name = std::string(to_string(protocol)) + "_" + std::string(to_string(property));
      CAPTURE(name);
      CHECK(render_prompt(protocol, property, "[Article]", "[Summary]") == read_snapshot(name));
    }
  }
}

TEST_CASE("consistency prompts match the exemplars") {
  const std::string note =
      " Note that \"consistency\" refers to how much information included in the summary is present in the "
      "source article.\nArticle: A\nSummary: S\n";
  CHECK(render_prompt(Protocol::zero_shot, Property::consistency, "A", "S") ==
        "Please determine whether the provided summary is consistent with the corresponding article." + note +
            "Answer: (yes or no)");
  CHECK(render_prompt(Protocol::chain_of_thought, Property::consistency, "A", "S") ==
        "Please determine whether the provided summary is consistent with the corresponding article." + note +
            "Answer: Explain your reasoning step by step then answer the question (yes or no)");
  CHECK(render_prompt(Protocol::score, Property::consistency, "A", "S") ==
        "Score the following summary given the corresponding article with respect to consistency from 0 to 1 "
        "where 1 means most consistent." +
            note + "Score:");
}

TEST_CASE("render_prompt is pure and rejects empty inputs") {
  const auto a = render_prompt(Protocol::score, Property::coherence, "Some article.", "Some summary.");
  CHECK(a == render_prompt(Protocol::score, Property::coherence, "Some article.", "Some summary."));
  CHECK_THROWS_AS(render_prompt(Protocol::score, Property::coherence, "", "x"), ValidationError);
  CHECK_THROWS_AS(render_prompt(Protocol::score, Property::coherence, "x", ""), ValidationError);
  const auto req = make_request(Protocol::zero_shot, Property::relevance, "art", "sum");
  CHECK(req.rendered_prompt == render_prompt(Protocol::zero_shot, Property::relevance, "art", "sum"));
}

TEST_CASE("parse score responses") {
  CHECK(*parse_verdict(Protocol::score, "Score: 0.85").score == 0.85);
  CHECK(*parse_verdict(Protocol::score, ".85").score == 0.85);
  CHECK(*parse_verdict(Protocol::score, "1").score == 1.0);
  CHECK(*parse_verdict(Protocol::score, "85%").score == Approx(0.85));
  CHECK(*parse_verdict(Protocol::score, "I would give it 0.7 out of 1").score == 0.7);
  CHECK(*parse_verdict(Protocol::score, "0.4/1").score == 0.4);
  CHECK(*parse_verdict(Protocol::score, "First 0.2, on reflection 0.6.").score == 0.6);
  CHECK(*parse_verdict(Protocol::score, "The T5 summary deserves 0.3").score == 0.3);
  CHECK_THROWS_AS(parse_verdict(Protocol::score, "I cannot score this."), UnparseableResponse);
  CHECK_THROWS_AS(parse_verdict(Protocol::score, "Score: 7"), UnparseableResponse);
  CHECK_THROWS_AS(parse_verdict(Protocol::score, "-0.5"), UnparseableResponse);
  try {
    parse_verdict(Protocol::score, "nothing");
  } catch (const UnparseableResponse& e) {
    CHECK(e.raw_response() == "nothing");
  }
}

TEST_CASE("scores survive a render and parse trip") {
  for (int i = 0; i <= 100; ++i) {
    const double s = i / 100.0;
    std::ostringstream ss;
    ss << "Score: " << s;
    CHECK(parse_verdict(Protocol::score, ss.str()).value() == Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("parse yes/no responses") {
  CHECK(*parse_verdict(Protocol::zero_shot, "Yes").answer);
  CHECK_FALSE(*parse_verdict(Protocol::zero_shot, "no.").answer);
  CHECK(parse_verdict(Protocol::zero_shot, "YES").value() == 1.0);
  CHECK_THROWS_AS(parse_verdict(Protocol::zero_shot, "Maybe"), UnparseableResponse);
  CHECK_THROWS_AS(parse_verdict(Protocol::zero_shot, "yesterday nobody"), UnparseableResponse);

  const auto v = parse_verdict(Protocol::chain_of_thought,
                               "The summary repeats the article facts.\nSo the answer is no, wait, yes.");
  CHECK(*v.answer);
  CHECK(v.rationale->find("repeats the article") != std::string::npos);
  CHECK_FALSE(v.score.has_value());
}

TEST_CASE("mock script parsing") {
  auto mock = MockChatClient::from_script(
      "# comment\n"
      "!when Summary: B && coherence => Score: 0.1\n"
      "!timeout\n"
      "Score: 0.5\\nthanks\n");
  ChatRequest r;
  r.prompt = "coherence ... Summary: B";
  CHECK(mock.complete(r) == "Score: 0.1");
  r.prompt = "relevance";
  CHECK_THROWS_AS(mock.complete(r), TransportError);
  CHECK(mock.complete(r) == "Score: 0.5\nthanks");
  CHECK(mock.complete(r) == "Score: 0.5\nthanks");
  CHECK(mock.calls() == 4);
  CHECK(mock.prompts().front().find("coherence") == 0);

  CHECK_THROWS_AS(MockChatClient::from_script("!bogus\n"), ConfigError);
  CHECK_THROWS_AS(MockChatClient::from_script("!when nothing\n"), ConfigError);
  CHECK_THROWS_AS(MockChatClient::from_script("# only comments\n"), ConfigError);
}

TEST_CASE("evaluate_summary retries unparseable responses") {
  auto mock = MockChatClient::from_script("garbage\ngarbage\nScore: 0.7\n");
  AuditLog audit;
  EvaluationContext ctx;
  ctx.request_id = "r/m/coherence";
  ctx.audit = &audit;
  const auto v = evaluate_summary(mock, fast_config(2), Property::coherence, "Article.", "Summary.",
                                  Protocol::score, ctx);
  CHECK(v.value() == 0.7);
  CHECK(mock.calls() == 3);
  const auto entries = audit.entries();
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].contains("error"));
  CHECK(entries[2]["request_id"] == "r/m/coherence#3");
  CHECK(entries[2]["value"] == 0.7);
}

TEST_CASE("evaluate_summary gives up after the retry budget") {
  auto timeouts = MockChatClient::from_script("!timeout\n");
  CHECK_THROWS_AS(evaluate_summary(timeouts, fast_config(1), Property::coherence, "A.", "S.", Protocol::score),
                  TransportError);
  CHECK(timeouts.calls() == 2);

  auto garbage = MockChatClient::constant("no idea");
  CHECK_THROWS_AS(evaluate_summary(garbage, fast_config(0), Property::coherence, "A.", "S.", Protocol::score),
                  UnparseableResponse);
  CHECK(garbage.calls() == 1);

  auto limited = MockChatClient::from_script("!ratelimit\nScore: 0.2\n");
  CHECK(evaluate_summary(limited, fast_config(1), Property::coherence, "A.", "S.", Protocol::score).value() == 0.2);
}

TEST_CASE("score_corpus fills every cell") {
  const auto c = small_corpus(2);
  auto mock = MockChatClient::constant("Score: 0.5");
  const auto scores = score_corpus(mock, fast_config(), c, "m",
                                   {kScoredProperties.begin(), kScoredProperties.end()});
  CHECK(scores.failures.empty());
  REQUIRE(scores.records.size() == 2);
  for (const auto& r : scores.records) {
    CHECK(r.cells.size() == 4);
    for (const auto& [p, v] : r.cells) CHECK(v == 0.5);
  }
  CHECK(mock.calls() == 8);
  CHECK_THROWS_AS(score_corpus(mock, fast_config(), c, "missing", {Property::coherence}), ValidationError);
}

TEST_CASE("score_corpus records failed cells and keeps going") {
  const auto c = small_corpus(2);
  auto mock = MockChatClient::from_script("!when Summary 1. && readability => unusable\nScore: 0.5\n");
  const auto scores = score_corpus(mock, fast_config(0), c, "m",
                                   {kScoredProperties.begin(), kScoredProperties.end()});
  REQUIRE(scores.failures.size() == 1);
  CHECK(scores.failures[0].record_id == "r1");
  CHECK(scores.failures[0].property == Property::readability);
  std::size_t present = 0;
  for (auto p : kScoredProperties) present += scores.present_cells(p);
  CHECK(present == 7);
  const auto partial = scores.partial_scores();
  CHECK_FALSE(partial[1].readability.has_value());
  CHECK(partial[0].readability == 0.5);
}

TEST_CASE("yes/no protocols map to 1 and 0") {
  const auto c = small_corpus(3);
  auto yes = MockChatClient::constant("Yes");
  const auto scores = score_corpus(yes, fast_config(), c, "m", {Property::consistency}, Protocol::zero_shot);
  for (const auto& r : scores.records) CHECK(r.cells.at(Property::consistency) == 1.0);
  CHECK(scores.partial_scores().size() == 3);
}

TEST_CASE("concurrent scoring keeps corpus order") {
  const auto c = small_corpus(12);
  auto mock = MockChatClient::from_script(
      "!when Summary 3. => Score: 0.3\n!when Summary 7. => Score: 0.7\nScore: 0.5\n");
  auto config = fast_config();
  config.max_in_flight = 4;
  AuditLog audit;
  const auto scores = score_corpus(mock, config, c, "m", {Property::relevance, Property::coherence},
                                   Protocol::score, &audit);
  REQUIRE(scores.records.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(scores.records[i].record_id == "r" + std::to_string(i));
    const double want = i == 3 ? 0.3 : i == 7 ? 0.7 : 0.5;
    CHECK(scores.records[i].cells.at(Property::relevance) == want);
  }
  CHECK(audit.entries().size() == 24);
}

TEST_CASE("rate limiter spaces requests") {
  RateLimiter limiter(2, std::chrono::milliseconds(100));
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) limiter.acquire();
  CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(80));
}

TEST_CASE("config validation") {
  JudgeConfig c;
  CHECK_NOTHROW(c.validate());
  c.timeout = std::chrono::milliseconds(0);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.temperature = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.max_in_flight = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("http client speaks the chat completions protocol") {
  httplib::Server server;
  std::string seen_body, seen_auth, seen_path;
  int hits = 0;
  server.Post(R"(/v1/chat/completions)", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    seen_auth = req.get_header_value("Authorization");
    seen_path = req.path;
    if (hits++ == 0) {
      res.status = 429;
      res.set_header("Retry-After", "0");
      return;
    }
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"Score: 0.9"}}]})",
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpChatClient client("http://127.0.0.1:" + std::to_string(port) + "/v1/", "sk-test");
  ChatRequest req;
  req.model = "judge-model";
  req.prompt = "Score:";
  req.timeout = std::chrono::milliseconds(2000);
  CHECK_THROWS_AS(client.complete(req), RateLimitError);
  CHECK(client.complete(req) == "Score: 0.9");
  server.stop();
  t.join();

  CHECK(seen_path == "/v1/chat/completions");
  CHECK(seen_auth == "Bearer sk-test");
  const auto body = nlohmann::json::parse(seen_body);
  CHECK(body["model"] == "judge-model");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "Score:");

  CHECK_THROWS_AS(HttpChatClient::response_content("{}"), TransportError);
  CHECK_THROWS_AS(HttpChatClient("ftp://x", ""), ConfigError);
}

TEST_CASE("unreachable endpoint is a transport error") {
  HttpChatClient client("http://127.0.0.1:1", "");
  ChatRequest req;
  req.timeout = std::chrono::milliseconds(500);
  CHECK_THROWS_AS(client.complete(req), TransportError);
}
