// summ-judge: metrics, judge, correlate and report subcommands.
//
// Exit codes: 0 success, 1 judge run with a property that has no
// successful cells, 2 configuration or validation error.

#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "summjudge/error.hpp"
#include "summjudge/judge.hpp"
#include "summjudge/pipeline.hpp"

namespace sj = summjudge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

struct CommonCorpusOptions {
  std::string corpus;
  std::size_t sample = sj::corpus::kDefaultSampleSize;
  std::size_t max_words = sj::corpus::kDefaultMaxWords;
  std::vector<std::string> models;
  std::string out = ".";
  std::string abbreviations;

  void attach(CLI::App* cmd) {
    cmd->add_option("--corpus", corpus, "JSONL corpus file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--sample", sample, "Records kept after filtering (first n)")->check(CLI::PositiveNumber);
    cmd->add_option("--max-words", max_words, "Article word limit (inclusive)")->check(CLI::PositiveNumber);
    cmd->add_option("--models", models, "Restrict to these summarizer models");
    cmd->add_option("--out", out, "Output directory");
    cmd->add_option("--abbreviations", abbreviations, "Abbreviation stop-list, one per line")
        ->check(CLI::ExistingFile);
  }

  sj::pipeline::RunManifest manifest(const std::string& command) const {
    sj::pipeline::RunManifest m;
    m.command = command;
    m.corpus_path = corpus;
    m.sample_size = sample;
    m.max_words = max_words;
    m.models = models;
    if (!abbreviations.empty()) m.abbreviations_path = abbreviations;
    m.output_dir = out;
    m.timestamp = sj::pipeline::current_timestamp();
    m.version = std::string(sj::pipeline::tool_version());
    return m;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Summary evaluation with traditional metrics and an LLM judge"};
  app.set_version_flag("--version", std::string(sj::pipeline::tool_version()));
  app.require_subcommand(1);

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "Score candidate summaries with traditional metrics");
  CommonCorpusOptions metrics_opts;
  metrics_opts.attach(metrics_cmd);
  std::string rouge_variant = "mean";
  std::string rouge_target = "reference";
  std::size_t lsa_rank = sj::coherence::kDefaultRank;
  std::string lsa_weighting = "tf";
  bool include_reference = false;
  std::size_t jobs = 1;
  metrics_cmd->add_option("--rouge-variant", rouge_variant, "ROUGE scalar used for relevance")
      ->check(CLI::IsMember({"1", "2", "L", "mean"}));
  metrics_cmd->add_option("--rouge-target", rouge_target, "Compare against the reference summary or the article")
      ->check(CLI::IsMember({"reference", "article"}));
  metrics_cmd->add_option("--lsa-rank", lsa_rank, "Retained LSA rank")->check(CLI::PositiveNumber);
  metrics_cmd->add_option("--lsa-weighting", lsa_weighting, "Term weighting")->check(CLI::IsMember({"tf", "tfidf"}));
  metrics_cmd->add_flag("--include-reference", include_reference,
                        "Also score reference summaries as model 'reference' (ROUGE against the article)");
  metrics_cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  // judge
  auto* judge_cmd = app.add_subcommand("judge", "Score candidate summaries with an LLM judge");
  CommonCorpusOptions judge_opts;
  judge_opts.attach(judge_cmd);
  sj::judge::JudgeConfig judge_config;
  std::string protocol = "score";
  std::string mock_script;
  long long timeout_ms = 30000;
  long long backoff_ms = 1000;
  long long window_ms = 60000;
  judge_cmd->add_option("--endpoint", judge_config.endpoint, "OpenAI-compatible base URL, e.g. https://api.openai.com/v1");
  judge_cmd->add_option("--model", judge_config.model, "Judge model name");
  judge_cmd->add_option("--protocol", protocol, "Prompt protocol")
      ->check(CLI::IsMember({"score", "zeroshot", "cot"}));
  judge_cmd->add_option("--mock-script", mock_script, "Use the scripted offline client")->check(CLI::ExistingFile);
  judge_cmd->add_option("--temperature", judge_config.temperature, "Sampling temperature");
  judge_cmd->add_option("--retries", judge_config.max_retries, "Re-asks after a failed attempt");
  judge_cmd->add_option("--timeout-ms", timeout_ms, "Per-request timeout");
  judge_cmd->add_option("--backoff-ms", backoff_ms, "Delay before retrying a failed request");
  judge_cmd->add_option("--concurrency", judge_config.max_in_flight, "Requests in flight")
      ->check(CLI::PositiveNumber);
  judge_cmd->add_option("--rate-limit", judge_config.rate_limit_requests, "Requests per window (0 = unlimited)");
  judge_cmd->add_option("--rate-window-ms", window_ms, "Rate limit window");

  // correlate
  auto* correlate_cmd = app.add_subcommand("correlate", "Pearson correlation between metric and judge tables");
  std::string metrics_table;
  std::string judge_table;
  std::string correlate_out = ".";
  correlate_cmd->add_option("--metrics", metrics_table, "metrics_table.json")->required()->check(CLI::ExistingFile);
  correlate_cmd->add_option("--judge", judge_table, "judge_table.json")->required()->check(CLI::ExistingFile);
  correlate_cmd->add_option("--out", correlate_out, "Output directory");

  // report
  auto* report_cmd = app.add_subcommand("report", "Print tables and their correlation");
  std::string report_metrics;
  std::string report_judge;
  report_cmd->add_option("--metrics", report_metrics, "metrics_table.json")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--judge", report_judge, "judge_table.json")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*metrics_cmd) {
      auto m = metrics_opts.manifest("metrics");
      m.include_reference = include_reference;
      m.metric_config = {*sj::metrics::parse_rouge_variant(rouge_variant),
                         *sj::metrics::parse_rouge_target(rouge_target), lsa_rank,
                         *sj::coherence::parse_weighting(lsa_weighting)};
      const auto run = sj::pipeline::run_metrics(m, jobs, warn);
      std::cout << sj::pipeline::format_property_table(run.table);
      std::cerr << "wrote " << (m.output_dir / "metrics_table.json").string() << '\n';
      return kExitOk;
    }

    if (*judge_cmd) {
      auto m = judge_opts.manifest("judge");
      m.judge_protocol = *sj::judge::parse_protocol(protocol);
      judge_config.timeout = std::chrono::milliseconds(timeout_ms);
      judge_config.retry_backoff = std::chrono::milliseconds(backoff_ms);
      judge_config.rate_limit_window = std::chrono::milliseconds(window_ms);
      judge_config.validate();

      std::unique_ptr<sj::judge::ChatClient> client;
      if (!mock_script.empty()) {
        client = std::make_unique<sj::judge::MockChatClient>(sj::judge::MockChatClient::from_file(mock_script));
        m.mock_script = mock_script;
      } else if (!judge_config.endpoint.empty()) {
        auto http = sj::judge::HttpChatClient::from_environment(judge_config.endpoint);
        if (!std::getenv(sj::judge::kApiKeyEnv)) {
          warn(std::string(sj::judge::kApiKeyEnv) + " is not set; sending requests without a bearer token");
        }
        client = std::move(http);
      } else {
        throw sj::ConfigError("judge needs --endpoint or --mock-script");
      }
      m.judge_endpoint = judge_config.endpoint;
      m.judge_model = judge_config.model;
      m.judge_temperature = judge_config.temperature;

      const auto run = sj::pipeline::run_judge(*client, judge_config, m, warn);
      if (run.failure_count() > 0) {
        std::cerr << run.failure_count() << " judge cell(s) failed; see "
                  << (m.output_dir / "judge_failures.json").string() << '\n';
      }
      if (!run.table) {
        for (const auto& e : run.empty_properties) std::cerr << "error: no successful cells for " << e << '\n';
        return kExitPartial;
      }
      std::cout << sj::pipeline::format_property_table(*run.table);
      return kExitOk;
    }

    if (*correlate_cmd) {
      const auto results = sj::pipeline::run_correlate(metrics_table, judge_table, correlate_out);
      std::cout << sj::pipeline::format_correlation_table(results);
      return kExitOk;
    }

    if (*report_cmd) {
      const auto mt = sj::pipeline::read_table(report_metrics);
      const auto jt = sj::pipeline::read_table(report_judge);
      std::cout << sj::pipeline::format_property_table(mt) << '\n'
                << sj::pipeline::format_property_table(jt) << '\n'
                << sj::pipeline::format_correlation_table(sj::stats::correlate_tables(mt, jt));
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
