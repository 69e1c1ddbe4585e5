#include "summjudge/judge.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

namespace summjudge::judge {
namespace {

using json = nlohmann::json;

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

JudgeVerdict parse_yes_no(Protocol protocol, std::string_view raw) {
  std::optional<bool> answer;
  std::size_t answer_pos = 0;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (!is_alpha(raw[i])) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < raw.size() && is_alpha(raw[i])) ++i;
    std::string word;
    for (std::size_t k = begin; k < i; ++k) word.push_back(lower(raw[k]));
    if (word == "yes" || word == "no") {
      answer = word == "yes";
      answer_pos = begin;
    }
  }
  if (!answer) throw UnparseableResponse("no yes/no answer in response", std::string(raw));

  JudgeVerdict v;
  v.protocol = protocol;
  v.answer = answer;
  v.raw_response = std::string(raw);
  if (protocol == Protocol::chain_of_thought) v.rationale = std::string(trim(raw.substr(0, answer_pos)));
  return v;
}

// True when the text before `pos` ends with '/' or "out of" (a denominator).
bool follows_denominator_marker(std::string_view raw, std::size_t pos) {
  auto head = raw.substr(0, pos);
  while (!head.empty() && std::isspace(static_cast<unsigned char>(head.back()))) head.remove_suffix(1);
  if (!head.empty() && head.back() == '/') return true;
  if (head.size() >= 6) {
    std::string tail;
    for (char c : head.substr(head.size() - 6)) tail.push_back(lower(c));
    if (tail == "out of" && (head.size() == 6 || !is_alnum(head[head.size() - 7]))) return true;
  }
  return false;
}

JudgeVerdict parse_score(std::string_view raw) {
  std::optional<double> chosen;
  std::size_t i = 0;
  while (i < raw.size()) {
    const bool starts_digit = is_digit(raw[i]);
    const bool starts_dot = raw[i] == '.' && i + 1 < raw.size() && is_digit(raw[i + 1]);
    if (!starts_digit && !starts_dot) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < raw.size() && is_digit(raw[i])) ++i;
    if (i + 1 < raw.size() && raw[i] == '.' && is_digit(raw[i + 1])) {
      ++i;
      while (i < raw.size() && is_digit(raw[i])) ++i;
    }
    const std::string literal(raw.substr(begin, i - begin));

    // Part of an identifier ("T5", "gpt-3.5") or a negative number.
    const bool glued = begin > 0 && (is_alpha(raw[begin - 1]) || raw[begin - 1] == '-' ||
                                     (raw[begin - 1] == '.' && begin > 1 && is_digit(raw[begin - 2])));
    std::size_t j = i;
    while (j < raw.size() && raw[j] == ' ') ++j;
    const bool percent = j < raw.size() && raw[j] == '%';
    if (percent) i = j + 1;
    if (glued || follows_denominator_marker(raw, begin)) continue;

    double value = std::stod(literal);
    if (percent) value /= 100.0;
    if (value >= 0.0 && value <= 1.0) chosen = value;
  }
  if (!chosen) throw UnparseableResponse("no score in [0, 1] in response", std::string(raw));
  JudgeVerdict v;
  v.protocol = Protocol::score;
  v.score = chosen;
  v.raw_response = std::string(raw);
  return v;
}

std::string unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size() && s[i + 1] == 'n') {
      out.push_back('\n');
      ++i;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::vector<std::string> split_needles(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find("&&", pos);
    const auto piece = trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (!piece.empty()) out.push_back(unescape(piece));
    if (next == std::string_view::npos) break;
    pos = next + 2;
  }
  return out;
}

}  // namespace

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::zero_shot: return "zeroshot";
    case Protocol::chain_of_thought: return "cot";
    case Protocol::score: return "score";
  }
  return "score";
}

std::optional<Protocol> parse_protocol(std::string_view name) {
  if (name == "zeroshot" || name == "zero_shot") return Protocol::zero_shot;
  if (name == "cot" || name == "chain_of_thought") return Protocol::chain_of_thought;
  if (name == "score") return Protocol::score;
  return std::nullopt;
}

std::string_view property_definition(Property p) {
  switch (p) {
    case Property::conciseness:
      return "A high-quality summary should effectively convey the most important information from the "
             "original source while keeping the length brief.";
    case Property::relevance:
      return "The information presented in the summary should be relevant to the main topic.";
    case Property::coherence:
      return "A good summary should have a clear structure and flow of ideas, making it easy to understand "
             "and follow.";
    case Property::readability:
      return "The sentence used in the summary should be clear and easily understandable.";
    case Property::consistency:
      return "how much information included in the summary is present in the source article";
  }
  return "";
}

std::string_view property_adjective(Property p) {
  switch (p) {
    case Property::conciseness: return "concise";
    case Property::relevance: return "relevant";
    case Property::coherence: return "coherent";
    case Property::readability: return "readable";
    case Property::consistency: return "consistent";
  }
  return "";
}

std::string render_prompt(Protocol protocol, Property property, std::string_view article, std::string_view summary) {
  if (article.empty()) throw ValidationError("cannot render prompt: empty article");
  if (summary.empty()) throw ValidationError("cannot render prompt: empty summary");

  const std::string name(to_string(property));
  const std::string adjective(property_adjective(property));
  std::string definition(property_definition(property));
  if (!definition.empty() && definition.back() == '.') definition.pop_back();

  std::string out;
  if (protocol == Protocol::score) {
    out += "Score the following summary given the corresponding article with respect to " + name +
           " from 0 to 1 where 1 means most " + adjective + ".";
  } else {
    out += "Please determine whether the provided summary is " + adjective + " with the corresponding article.";
  }
  out += " Note that \"" + name + "\" refers to " + definition + ".\n";
  out += "Article: ";
  out += article;
  out += "\nSummary: ";
  out += summary;
  out += "\n";
  switch (protocol) {
    case Protocol::zero_shot: out += "Answer: (yes or no)"; break;
    case Protocol::chain_of_thought:
      out += "Answer: Explain your reasoning step by step then answer the question (yes or no)";
      break;
    case Protocol::score: out += "Score:"; break;
  }
  return out;
}

JudgeRequest make_request(Protocol protocol, Property property, std::string article, std::string summary) {
  JudgeRequest r;
  r.protocol = protocol;
  r.property = property;
  r.rendered_prompt = render_prompt(protocol, property, article, summary);
  r.article = std::move(article);
  r.summary = std::move(summary);
  return r;
}

double JudgeVerdict::value() const {
  if (score) return *score;
  if (answer) return *answer ? 1.0 : 0.0;
  throw ValidationError("verdict carries neither a score nor an answer");
}

JudgeVerdict parse_verdict(Protocol protocol, std::string_view raw_response) {
  if (protocol == Protocol::score) return parse_score(raw_response);
  return parse_yes_no(protocol, raw_response);
}

void JudgeConfig::validate() const {
  if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (max_in_flight == 0) throw ConfigError("max_in_flight must be at least 1");
  if (rate_limit_requests > 0 && rate_limit_window.count() <= 0) {
    throw ConfigError("rate limit window must be positive");
  }
}

// ---------------------------------------------------------------------------
// MockChatClient

MockChatClient::MockChatClient(std::vector<Rule> rules, std::vector<Step> steps)
    : rules_(std::move(rules)), steps_(std::move(steps)) {
  if (rules_.empty() && steps_.empty()) throw ConfigError("mock script has no rules or steps");
}

MockChatClient::MockChatClient(MockChatClient&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  rules_ = std::move(other.rules_);
  steps_ = std::move(other.steps_);
  next_step_ = other.next_step_;
  calls_ = other.calls_;
  prompts_ = std::move(other.prompts_);
}

MockChatClient MockChatClient::constant(std::string response) {
  return MockChatClient({}, {Step{Step::Kind::respond, std::move(response)}});
}

MockChatClient MockChatClient::from_script(std::string_view script) {
  std::vector<Rule> rules;
  std::vector<Step> steps;
  std::istringstream in{std::string(script)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() != '!') {
      steps.push_back({Step::Kind::respond, unescape(t)});
      continue;
    }
    const auto space = t.find(' ');
    const auto directive = t.substr(0, space);
    const auto rest = space == std::string_view::npos ? std::string_view{} : trim(t.substr(space + 1));
    if (directive == "!when") {
      const auto arrow = rest.find("=>");
      if (arrow == std::string_view::npos) {
        throw ConfigError("mock script line " + std::to_string(line_no) + ": !when needs '=>'");
      }
      Rule rule{split_needles(rest.substr(0, arrow)), unescape(trim(rest.substr(arrow + 2)))};
      if (rule.needles.empty()) {
        throw ConfigError("mock script line " + std::to_string(line_no) + ": !when needs a substring");
      }
      rules.push_back(std::move(rule));
    } else if (directive == "!timeout") {
      steps.push_back({Step::Kind::timeout, {}});
    } else if (directive == "!ratelimit") {
      steps.push_back({Step::Kind::rate_limit, {}});
    } else if (directive == "!error") {
      steps.push_back({Step::Kind::error, std::string(rest)});
    } else {
      throw ConfigError("mock script line " + std::to_string(line_no) + ": unknown directive " +
                        std::string(directive));
    }
  }
  return MockChatClient(std::move(rules), std::move(steps));
}

MockChatClient MockChatClient::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open mock script: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_script(ss.str());
}

std::string MockChatClient::complete(const ChatRequest& request) {
  Step step;
  {
    std::lock_guard lock(mutex_);
    ++calls_;
    prompts_.push_back(request.prompt);
    for (const auto& rule : rules_) {
      const bool hit = std::all_of(rule.needles.begin(), rule.needles.end(), [&](const std::string& n) {
        return request.prompt.find(n) != std::string::npos;
      });
      if (hit) return rule.response;
    }
    if (steps_.empty()) throw TransportError("mock: no rule matched and no steps scripted");
    step = steps_[std::min(next_step_, steps_.size() - 1)];
    if (next_step_ < steps_.size()) ++next_step_;
  }
  switch (step.kind) {
    case Step::Kind::respond: return step.text;
    case Step::Kind::timeout: throw TransportError("mock: request timed out");
    case Step::Kind::rate_limit: throw RateLimitError("mock: rate limit exceeded", std::chrono::milliseconds(0));
    case Step::Kind::error: throw TransportError("mock: " + step.text);
  }
  return step.text;
}

std::size_t MockChatClient::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::vector<std::string> MockChatClient::prompts() const {
  std::lock_guard lock(mutex_);
  return prompts_;
}

// ---------------------------------------------------------------------------
// RateLimiter, AuditLog

RateLimiter::RateLimiter(std::size_t requests, std::chrono::milliseconds window)
    : capacity_(static_cast<double>(requests)),
      tokens_(static_cast<double>(requests)),
      refill_per_ms_(window.count() > 0 ? static_cast<double>(requests) / static_cast<double>(window.count()) : 0.0),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (capacity_ <= 0.0) return;
  std::unique_lock lock(mutex_);
  while (true) {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double, std::milli>(now - last_).count();
    tokens_ = std::min(capacity_, tokens_ + elapsed * refill_per_ms_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const auto wait = std::chrono::duration<double, std::milli>((1.0 - tokens_) / refill_per_ms_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

void AuditLog::record(json entry) {
  std::lock_guard lock(mutex_);
  if (out_) {
    *out_ << entry.dump() << '\n';
    out_->flush();
  }
  entries_.push_back(std::move(entry));
}

std::vector<json> AuditLog::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

// ---------------------------------------------------------------------------
// Evaluation

JudgeVerdict evaluate_summary(ChatClient& client, const JudgeConfig& config, Property property,
                              std::string_view article, std::string_view summary, Protocol protocol,
                              const EvaluationContext& context) {
  ChatRequest request;
  request.model = config.model;
  request.prompt = render_prompt(protocol, property, article, summary);
  request.temperature = config.temperature;
  request.timeout = config.timeout;

  const std::size_t attempts = config.max_retries + 1;
  for (std::size_t attempt = 1;; ++attempt) {
    request.request_id = context.request_id + (context.request_id.empty() ? "" : "#") + std::to_string(attempt);
    json entry = context.tags;
    entry["request_id"] = request.request_id;
    entry["attempt"] = attempt;
    entry["protocol"] = to_string(protocol);
    entry["property"] = to_string(property);
    entry["judge_model"] = config.model;
    entry["temperature"] = config.temperature;
    entry["prompt"] = request.prompt;
    const bool last = attempt >= attempts;

    if (context.limiter) context.limiter->acquire();
    std::string raw;
    try {
      raw = client.complete(request);
    } catch (const RateLimitError& e) {
      entry["error"] = std::string("rate_limit: ") + e.what();
      if (context.audit) context.audit->record(std::move(entry));
      if (last) throw;
      const auto wait = e.retry_after().count() > 0 ? e.retry_after() : config.retry_backoff;
      std::this_thread::sleep_for(wait);
      continue;
    } catch (const TransportError& e) {
      entry["error"] = std::string("transport: ") + e.what();
      if (context.audit) context.audit->record(std::move(entry));
      if (last) throw;
      std::this_thread::sleep_for(config.retry_backoff);
      continue;
    }

    entry["response"] = raw;
    try {
      auto verdict = parse_verdict(protocol, raw);
      entry["value"] = verdict.value();
      if (verdict.rationale) entry["rationale"] = *verdict.rationale;
      if (context.audit) context.audit->record(std::move(entry));
      return verdict;
    } catch (const UnparseableResponse& e) {
      entry["error"] = std::string("unparseable: ") + e.what();
      if (context.audit) context.audit->record(std::move(entry));
      if (last) throw;
    }
  }
}

std::size_t CorpusScores::present_cells(Property p) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [&](const RecordScores& r) { return r.cells.count(p) != 0; }));
}

std::vector<stats::PartialScores> CorpusScores::partial_scores() const {
  std::vector<stats::PartialScores> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    stats::PartialScores s;
    for (auto p : kScoredProperties) {
      if (const auto it = r.cells.find(p); it != r.cells.end()) s.set(p, it->second);
    }
    out.push_back(s);
  }
  return out;
}

CorpusScores score_corpus(ChatClient& client, const JudgeConfig& config, const corpus::Corpus& corpus,
                          const std::string& model_name, const std::vector<Property>& properties,
                          Protocol protocol, AuditLog* audit, RateLimiter* limiter) {
  config.validate();
  if (!corpus.has_model(model_name)) throw ValidationError("model '" + model_name + "' is not in the corpus");

  const std::size_t n_cells = corpus.records.size() * properties.size();
  std::vector<std::optional<double>> values(n_cells);
  std::vector<std::optional<std::string>> errors(n_cells);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t cell = next++; cell < n_cells; cell = next++) {
      const auto& record = corpus.records[cell / properties.size()];
      const Property property = properties[cell % properties.size()];
      const auto cand = record.candidates.find(model_name);
      if (cand == record.candidates.end()) {
        errors[cell] = "record has no candidate for model '" + model_name + "'";
        continue;
      }
      EvaluationContext ctx;
      ctx.request_id = record.id + "/" + model_name + "/" + std::string(to_string(property));
      ctx.audit = audit;
      ctx.limiter = limiter;
      ctx.tags = {{"record_id", record.id}, {"summarizer", model_name}};
      try {
        values[cell] = evaluate_summary(client, config, property, record.article, cand->second, protocol, ctx).value();
      } catch (const Error& e) {
        errors[cell] = e.what();
      }
    }
  };

  const std::size_t n_workers = std::min(config.max_in_flight, std::max<std::size_t>(n_cells, 1));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  CorpusScores out;
  out.model_name = model_name;
  for (std::size_t r = 0; r < corpus.records.size(); ++r) {
    RecordScores rs;
    rs.record_id = corpus.records[r].id;
    for (std::size_t p = 0; p < properties.size(); ++p) {
      const std::size_t cell = r * properties.size() + p;
      if (values[cell]) {
        rs.cells[properties[p]] = *values[cell];
      } else {
        out.failures.push_back({rs.record_id, properties[p], errors[cell].value_or("unknown error")});
      }
    }
    out.records.push_back(std::move(rs));
  }
  return out;
}

}  // namespace summjudge::judge
