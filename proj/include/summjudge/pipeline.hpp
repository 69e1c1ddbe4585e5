#pragma once

// End-to-end stages behind the summ-judge CLI and their file formats.
//
// Table JSON:        {"family": "metrics"|"judge", "n_per_cell": N,
//                     "rows": {model: {conciseness, relevance, coherence, readability}}}
// Correlation JSON:  {"n_models": N, "results": [{property, n, r, p_value, note?}]}
// metrics_per_record.csv, judge_per_record.csv, plot_data.csv: see writers.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "summjudge/corpus.hpp"
#include "summjudge/judge.hpp"
#include "summjudge/metrics.hpp"
#include "summjudge/stats.hpp"

namespace summjudge::pipeline {

std::string_view tool_version();

struct RunManifest {
  std::string command;  // "metrics" or "judge"
  std::filesystem::path corpus_path;
  std::size_t sample_size = corpus::kDefaultSampleSize;
  std::size_t max_words = corpus::kDefaultMaxWords;
  std::vector<std::string> models;  // empty: every model in the corpus
  bool include_reference = false;
  std::optional<std::filesystem::path> abbreviations_path;
  metrics::MetricConfig metric_config;
  std::string judge_endpoint;
  std::string judge_model;
  judge::Protocol judge_protocol = judge::Protocol::score;
  double judge_temperature = 0.0;
  std::optional<std::filesystem::path> mock_script;
  std::filesystem::path output_dir;
  std::string timestamp;  // ISO 8601 UTC
  std::string version;

  bool operator==(const RunManifest&) const = default;
};

/// SOURCE_DATE_EPOCH if set, otherwise the current time.
std::string current_timestamp();

nlohmann::ordered_json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json table_to_json(const stats::ModelPropertyTable& table);
/// Validates family, n_per_cell and every cell range.
stats::ModelPropertyTable table_from_json(const nlohmann::ordered_json& j);

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);
nlohmann::ordered_json read_json(const std::filesystem::path& path);

stats::ModelPropertyTable read_table(const std::filesystem::path& path);
void write_table(const std::filesystem::path& path, const stats::ModelPropertyTable& table);

/// Shortest representation that round-trips.
std::string format_double(double v);

/// Loads, filters by word limit, and samples the corpus named by the manifest.
corpus::Corpus prepare_corpus(const RunManifest& manifest, const corpus::WarningSink& warn = {});

struct MetricRow {
  std::string record_id;
  std::string model;
  metrics::MetricScores scores;
};

struct MetricsRun {
  stats::ModelPropertyTable table;
  std::vector<MetricRow> rows;  // corpus order, then model order
};

/// Pseudo-model name used for reference summaries with include_reference.
inline constexpr const char* kReferenceModel = "reference";

/// Throws with the record id and model when a metric fails.
MetricsRun compute_metrics(const corpus::Corpus& corpus, const RunManifest& manifest, std::size_t jobs = 1);

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);

/// Runs the metrics stage and writes metrics_table.json,
/// metrics_per_record.csv and manifest.json to manifest.output_dir.
MetricsRun run_metrics(const RunManifest& manifest, std::size_t jobs = 1, const corpus::WarningSink& warn = {});

struct JudgeRun {
  std::optional<stats::ModelPropertyTable> table;  // absent if a property has no cells
  std::vector<judge::CorpusScores> per_model;
  std::vector<std::string> empty_properties;  // "model/property" with zero cells

  std::size_t failure_count() const;
};

JudgeRun compute_judge(judge::ChatClient& client, const judge::JudgeConfig& config, const corpus::Corpus& corpus,
                       const RunManifest& manifest, judge::AuditLog* audit = nullptr);

void write_judge_csv(std::ostream& out, const std::vector<judge::CorpusScores>& per_model);

/// Runs the judge stage and writes judge_table.json (when complete),
/// judge_per_record.csv, judge_audit.jsonl, judge_failures.json (when any
/// cell failed) and manifest.json.
JudgeRun run_judge(judge::ChatClient& client, const judge::JudgeConfig& config, const RunManifest& manifest,
                   const corpus::WarningSink& warn = {});

nlohmann::ordered_json correlation_to_json(const std::vector<stats::CorrelationResult>& results);
std::vector<stats::CorrelationResult> correlation_from_json(const nlohmann::ordered_json& j);

/// Property / Correlation coefficient / P Value, two decimals.
std::string format_correlation_table(const std::vector<stats::CorrelationResult>& results);
std::string format_property_table(const stats::ModelPropertyTable& table);

/// model,property,family,score rows for grouped bar charts.
void write_plot_csv(std::ostream& out, const stats::ModelPropertyTable& metrics_table,
                    const stats::ModelPropertyTable& judge_table);

/// Writes correlation.json, correlation.txt and plot_data.csv into out_dir.
std::vector<stats::CorrelationResult> run_correlate(const std::filesystem::path& metrics_path,
                                                    const std::filesystem::path& judge_path,
                                                    const std::filesystem::path& out_dir);

}  // namespace summjudge::pipeline
