#pragma once

// LLM-as-judge evaluation. Three prompt protocols are supported:
//
//   zero_shot         yes/no verdict
//   chain_of_thought  step-by-step rationale followed by yes/no
//   score             a number from 0 to 1
//
// Prompts are rendered from fixed templates, sent to a ChatClient, and the
// responses are parsed into JudgeVerdicts. Every attempt is written to an
// AuditLog so a run can be re-analyzed without re-querying.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "summjudge/corpus.hpp"
#include "summjudge/error.hpp"
#include "summjudge/property.hpp"
#include "summjudge/stats.hpp"

namespace summjudge::judge {

enum class Protocol { zero_shot, chain_of_thought, score };

std::string_view to_string(Protocol p);
/// Accepts zeroshot/zero_shot, cot/chain_of_thought, score.
std::optional<Protocol> parse_protocol(std::string_view name);

/// Text inserted after `Note that "<name>" refers to`.
std::string_view property_definition(Property p);
/// consistent, concise, relevant, coherent, readable.
std::string_view property_adjective(Property p);

class UnparseableResponse : public Error {
 public:
  UnparseableResponse(const std::string& what, std::string raw)
      : Error(what), raw_response_(std::move(raw)) {}
  const std::string& raw_response() const noexcept { return raw_response_; }

 private:
  std::string raw_response_;
};

/// Network failure, timeout, or a non-success HTTP status.
class TransportError : public Error {
 public:
  using Error::Error;
};

class RateLimitError : public TransportError {
 public:
  RateLimitError(const std::string& what, std::chrono::milliseconds retry_after)
      : TransportError(what), retry_after_(retry_after) {}
  std::chrono::milliseconds retry_after() const noexcept { return retry_after_; }

 private:
  std::chrono::milliseconds retry_after_;
};

struct JudgeRequest {
  Protocol protocol = Protocol::score;
  Property property = Property::consistency;
  std::string article;
  std::string summary;
  std::string rendered_prompt;
};

/// Throws ValidationError when article or summary is empty.
std::string render_prompt(Protocol protocol, Property property, std::string_view article, std::string_view summary);

JudgeRequest make_request(Protocol protocol, Property property, std::string article, std::string summary);

struct JudgeVerdict {
  Protocol protocol = Protocol::score;
  std::optional<bool> answer;
  std::optional<std::string> rationale;
  std::optional<double> score;
  std::string raw_response;

  /// score for the score protocol, otherwise yes -> 1, no -> 0.
  double value() const;
};

/// Yes/no protocols take the last standalone yes/no word (case-insensitive);
/// chain_of_thought keeps the preceding text as rationale. The score
/// protocol takes the last numeric literal in [0, 1] ("0.85", ".85", "1",
/// "85%"), ignoring denominators such as "out of 1" or "/1". Throws
/// UnparseableResponse otherwise.
JudgeVerdict parse_verdict(Protocol protocol, std::string_view raw_response);

struct JudgeConfig {
  std::string endpoint;
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  std::size_t max_retries = 2;
  std::chrono::milliseconds timeout{30000};
  /// Token bucket; 0 requests disables limiting.
  std::size_t rate_limit_requests = 0;
  std::chrono::milliseconds rate_limit_window{60000};
  std::size_t max_in_flight = 1;
  /// Delay before retrying after a transport error without Retry-After.
  std::chrono::milliseconds retry_backoff{1000};

  /// Throws ConfigError on timeout <= 0, negative temperature, or a zero
  /// concurrency bound.
  void validate() const;
};

struct ChatRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  std::chrono::milliseconds timeout{30000};
  std::string request_id;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  /// Returns the assistant message text. Throws TransportError (or
  /// RateLimitError) on failure. Must be safe to call concurrently.
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// OpenAI-compatible chat completions client: POST <endpoint>/chat/completions.
class HttpChatClient : public ChatClient {
 public:
  /// `api_key` empty means no Authorization header.
  HttpChatClient(std::string endpoint, std::string api_key);

  /// Reads the key from SUMMJUDGE_API_KEY.
  static std::unique_ptr<HttpChatClient> from_environment(const std::string& endpoint);

  std::string complete(const ChatRequest& request) override;

  static nlohmann::json request_body(const ChatRequest& request);
  /// Content of choices[0].message.content; TransportError if absent.
  static std::string response_content(std::string_view body);

 private:
  std::string base_;  // scheme://host[:port]
  std::string path_;  // /prefix/chat/completions
  std::string api_key_;
};

inline constexpr const char* kApiKeyEnv = "SUMMJUDGE_API_KEY";

/// Scripted in-process client.
///
/// Script format, one directive per line:
///   # comment                      ignored, as are blank lines
///   !when A && B => response       rule: answers any prompt containing all
///                                  of the substrings; does not advance
///   !timeout                       step: throws TransportError
///   !ratelimit                     step: throws RateLimitError
///   !error message                 step: throws TransportError(message)
///   anything else                  step: literal response ("\n" = newline)
/// Steps are consumed in order and the last step repeats forever.
class MockChatClient : public ChatClient {
 public:
  struct Step {
    enum class Kind { respond, timeout, rate_limit, error };
    Kind kind = Kind::respond;
    std::string text;
  };
  struct Rule {
    std::vector<std::string> needles;
    std::string response;
  };

  MockChatClient(std::vector<Rule> rules, std::vector<Step> steps);
  MockChatClient(MockChatClient&& other) noexcept;

  /// Always answers `response`.
  static MockChatClient constant(std::string response);
  static MockChatClient from_script(std::string_view script);
  static MockChatClient from_file(const std::filesystem::path& path);

  std::string complete(const ChatRequest& request) override;

  std::size_t calls() const;
  std::vector<std::string> prompts() const;

 private:
  std::vector<Rule> rules_;
  std::vector<Step> steps_;
  mutable std::mutex mutex_;
  std::size_t next_step_ = 0;
  std::size_t calls_ = 0;
  std::vector<std::string> prompts_;
};

/// Token bucket shared across workers.
class RateLimiter {
 public:
  RateLimiter(std::size_t requests, std::chrono::milliseconds window);
  void acquire();

 private:
  std::mutex mutex_;
  double capacity_;
  double tokens_;
  double refill_per_ms_;
  std::chrono::steady_clock::time_point last_;
};

/// JSONL sink for request/response pairs. Entries are also kept in memory.
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(std::ostream& out) : out_(&out) {}

  void record(nlohmann::json entry);
  std::vector<nlohmann::json> entries() const;

 private:
  std::ostream* out_ = nullptr;
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> entries_;
};

struct EvaluationContext {
  std::string request_id;
  AuditLog* audit = nullptr;
  RateLimiter* limiter = nullptr;
  /// Extra fields copied into each audit entry (record id, model, ...).
  nlohmann::json tags = nlohmann::json::object();
};

/// render -> submit -> parse, with up to config.max_retries re-asks after a
/// transport failure or an unparseable response. Rate-limit responses wait
/// for Retry-After (or the configured backoff) before retrying.
JudgeVerdict evaluate_summary(ChatClient& client, const JudgeConfig& config, Property property,
                              std::string_view article, std::string_view summary, Protocol protocol,
                              const EvaluationContext& context = {});

struct RecordScores {
  std::string record_id;
  std::map<Property, double> cells;  // absent cells are missing
};

struct CellFailure {
  std::string record_id;
  Property property = Property::consistency;
  std::string error;
};

struct CorpusScores {
  std::string model_name;
  std::vector<RecordScores> records;  // corpus order
  std::vector<CellFailure> failures;  // corpus order, then property order

  std::size_t present_cells(Property p) const;
  /// Scored properties only; cells for other properties are ignored.
  std::vector<stats::PartialScores> partial_scores() const;
};

/// Scores every (record, property) cell of one summarizer model. Failed
/// cells are left absent and listed in `failures`; the run never stops early.
/// Throws ValidationError if the model is not in the corpus.
CorpusScores score_corpus(ChatClient& client, const JudgeConfig& config, const corpus::Corpus& corpus,
                          const std::string& model_name, const std::vector<Property>& properties,
                          Protocol protocol = Protocol::score, AuditLog* audit = nullptr,
                          RateLimiter* limiter = nullptr);

}  // namespace summjudge::judge
