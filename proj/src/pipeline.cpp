#include "summjudge/pipeline.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "summjudge/error.hpp"

#ifndef SUMMJUDGE_VERSION
#define SUMMJUDGE_VERSION "0.0.0"
#endif

namespace summjudge::pipeline {
namespace {

using ojson = nlohmann::ordered_json;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string capitalized(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

textproc::AbbreviationList load_abbreviations(const RunManifest& m) {
  if (m.abbreviations_path) return textproc::AbbreviationList::from_file(*m.abbreviations_path);
  return textproc::AbbreviationList::builtin();
}

std::vector<std::string> selected_models(const corpus::Corpus& c, const RunManifest& m) {
  if (m.models.empty()) return c.model_names;
  for (const auto& name : m.models) {
    if (!c.has_model(name)) throw ValidationError("model '" + name + "' is not in the corpus");
  }
  return m.models;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(jobs, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

}  // namespace

std::string_view tool_version() { return SUMMJUDGE_VERSION; }

std::string current_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      t = static_cast<std::time_t>(std::stoll(sde));
    } catch (const std::exception&) {
      throw ConfigError("SOURCE_DATE_EPOCH is not an integer");
    }
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Manifest and table serialization

ojson manifest_to_json(const RunManifest& m) {
  ojson j;
  j["command"] = m.command;
  j["corpus"] = m.corpus_path.string();
  j["sample"] = m.sample_size;
  j["max_words"] = m.max_words;
  j["models"] = m.models;
  j["include_reference"] = m.include_reference;
  j["abbreviations"] = m.abbreviations_path ? ojson(m.abbreviations_path->string()) : ojson(nullptr);
  j["metrics"] = {{"rouge_variant", metrics::to_string(m.metric_config.rouge_variant)},
                  {"rouge_target", metrics::to_string(m.metric_config.rouge_target)},
                  {"lsa_rank", m.metric_config.lsa_rank},
                  {"lsa_weighting", coherence::to_string(m.metric_config.lsa_weighting)}};
  j["judge"] = {{"endpoint", m.judge_endpoint},
                {"model", m.judge_model},
                {"protocol", judge::to_string(m.judge_protocol)},
                {"temperature", m.judge_temperature},
                {"mock_script", m.mock_script ? ojson(m.mock_script->string()) : ojson(nullptr)}};
  j["out"] = m.output_dir.string();
  j["timestamp"] = m.timestamp;
  j["version"] = m.version;
  return j;
}

RunManifest manifest_from_json(const ojson& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.corpus_path = j.at("corpus").get<std::string>();
    m.sample_size = j.at("sample").get<std::size_t>();
    m.max_words = j.at("max_words").get<std::size_t>();
    m.models = j.at("models").get<std::vector<std::string>>();
    m.include_reference = j.at("include_reference").get<bool>();
    if (!j.at("abbreviations").is_null()) m.abbreviations_path = j.at("abbreviations").get<std::string>();
    const auto& mc = j.at("metrics");
    const auto variant = metrics::parse_rouge_variant(mc.at("rouge_variant").get<std::string>());
    const auto target = metrics::parse_rouge_target(mc.at("rouge_target").get<std::string>());
    const auto weighting = coherence::parse_weighting(mc.at("lsa_weighting").get<std::string>());
    if (!variant || !target || !weighting) throw ValidationError("manifest: bad metric configuration");
    m.metric_config = {*variant, *target, mc.at("lsa_rank").get<std::size_t>(), *weighting};
    const auto& jc = j.at("judge");
    m.judge_endpoint = jc.at("endpoint").get<std::string>();
    m.judge_model = jc.at("model").get<std::string>();
    const auto protocol = judge::parse_protocol(jc.at("protocol").get<std::string>());
    if (!protocol) throw ValidationError("manifest: bad judge protocol");
    m.judge_protocol = *protocol;
    m.judge_temperature = jc.at("temperature").get<double>();
    if (!jc.at("mock_script").is_null()) m.mock_script = jc.at("mock_script").get<std::string>();
    m.output_dir = j.at("out").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.version = j.at("version").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
}

ojson table_to_json(const stats::ModelPropertyTable& table) {
  ojson rows = ojson::object();
  for (const auto& [model, s] : table.rows) {
    rows[model] = {{"conciseness", s.conciseness},
                   {"relevance", s.relevance},
                   {"coherence", s.coherence},
                   {"readability", s.readability}};
  }
  ojson j;
  j["family"] = stats::to_string(table.family);
  j["n_per_cell"] = table.n_per_cell;
  j["rows"] = std::move(rows);
  return j;
}

stats::ModelPropertyTable table_from_json(const ojson& j) {
  stats::ModelPropertyTable t;
  try {
    const auto family = stats::parse_family(j.at("family").get<std::string>());
    if (!family) throw ValidationError("table: family must be 'metrics' or 'judge'");
    t.family = *family;
    const auto& n = j.at("n_per_cell");
    if (!n.is_number_integer() || n.get<long long>() < 1) throw ValidationError("table: n_per_cell must be >= 1");
    t.n_per_cell = n.get<std::size_t>();
    for (const auto& [model, cells] : j.at("rows").items()) {
      stats::PropertyScores s;
      for (auto p : kScoredProperties) {
        const auto& v = cells.at(std::string(to_string(p)));
        if (!v.is_number()) throw ValidationError("table: " + model + "/" + std::string(to_string(p)) + " is not a number");
        s.set(p, v.get<double>());
      }
      t.rows.emplace_back(model, s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("table: ") + e.what());
  }
  t.validate();
  return t;
}

void write_json(const std::filesystem::path& path, const ojson& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ojson read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

stats::ModelPropertyTable read_table(const std::filesystem::path& path) {
  try {
    return table_from_json(read_json(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_table(const std::filesystem::path& path, const stats::ModelPropertyTable& table) {
  write_json(path, table_to_json(table));
}

// ---------------------------------------------------------------------------
// Metrics stage

corpus::Corpus prepare_corpus(const RunManifest& manifest, const corpus::WarningSink& warn) {
  auto c = corpus::load_corpus(manifest.corpus_path, corpus::CorpusFormat::jsonl, warn);
  c = corpus::filter_by_word_limit(c, manifest.max_words);
  return corpus::take_sample(c, manifest.sample_size);
}

MetricsRun compute_metrics(const corpus::Corpus& corpus, const RunManifest& manifest, std::size_t jobs) {
  const auto abbreviations = load_abbreviations(manifest);
  auto models = selected_models(corpus, manifest);
  if (manifest.include_reference) models.emplace_back(kReferenceModel);
  if (models.empty()) throw ValidationError("corpus has no candidate summaries to score");

  struct Slot {
    std::optional<metrics::MetricScores> scores;
    std::string error;
  };
  const std::size_t n_models = models.size();
  std::vector<Slot> slots(corpus.records.size() * n_models);

  parallel_for(corpus.records.size(), jobs, [&](std::size_t r) {
    const auto& rec = corpus.records[r];
    for (std::size_t m = 0; m < n_models; ++m) {
      auto& slot = slots[r * n_models + m];
      const std::string& model = models[m];
      try {
        if (manifest.include_reference && m + 1 == n_models) {
          if (rec.reference_summary.empty()) continue;
          auto cfg = manifest.metric_config;
          cfg.rouge_target = metrics::RougeTarget::article;
          slot.scores = metrics::evaluate(rec.reference_summary, rec.article, rec.reference_summary, cfg, abbreviations);
        } else if (const auto it = rec.candidates.find(model); it != rec.candidates.end()) {
          slot.scores = metrics::evaluate(it->second, rec.article, rec.reference_summary, manifest.metric_config,
                                          abbreviations);
        }
      } catch (const Error& e) {
        slot.error = "record '" + rec.id + "', model '" + model + "': " + e.what();
      }
    }
  });

  MetricsRun run;
  std::vector<std::vector<stats::PartialScores>> per_model(n_models);
  for (std::size_t r = 0; r < corpus.records.size(); ++r) {
    for (std::size_t m = 0; m < n_models; ++m) {
      auto& slot = slots[r * n_models + m];
      if (!slot.error.empty()) throw ValidationError(slot.error);
      if (!slot.scores) continue;
      per_model[m].push_back(stats::PartialScores::from(slot.scores->normalized));
      run.rows.push_back({corpus.records[r].id, models[m], std::move(*slot.scores)});
    }
  }

  run.table.family = stats::Family::metrics;
  std::size_t n_min = 0;
  for (std::size_t m = 0; m < n_models; ++m) {
    if (per_model[m].empty()) throw ValidationError("model '" + models[m] + "' has no scored records");
    const auto agg = stats::aggregate(per_model[m]);
    run.table.rows.emplace_back(models[m], agg.mean);
    n_min = m == 0 ? agg.min_count() : std::min(n_min, agg.min_count());
  }
  run.table.n_per_cell = n_min;
  run.table.validate();
  return run;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << "record_id,model,compression_ratio,rouge1_precision,rouge1_recall,rouge1_f1,"
         "rouge2_precision,rouge2_recall,rouge2_f1,rougeL_precision,rougeL_recall,rougeL_f1,"
         "lsa_coherence,flesch_reading_ease,flesch_kincaid_grade,"
         "conciseness,relevance,coherence,readability\n";
  for (const auto& row : rows) {
    const auto& s = row.scores;
    const auto prf = [](const metrics::PRF& x) {
      return format_double(x.precision) + "," + format_double(x.recall) + "," + format_double(x.f1);
    };
    out << csv_field(row.record_id) << ',' << csv_field(row.model) << ',' << format_double(s.compression_ratio)
        << ',' << prf(s.rouge.rouge1) << ',' << prf(s.rouge.rouge2) << ',' << prf(s.rouge.rougeL) << ','
        << format_double(s.coherence) << ',' << format_double(s.readability.reading_ease) << ','
        << format_double(s.readability.grade_level) << ',' << format_double(s.normalized.conciseness) << ','
        << format_double(s.normalized.relevance) << ',' << format_double(s.normalized.coherence) << ','
        << format_double(s.normalized.readability) << '\n';
  }
}

MetricsRun run_metrics(const RunManifest& manifest, std::size_t jobs, const corpus::WarningSink& warn) {
  const auto c = prepare_corpus(manifest, warn);
  auto run = compute_metrics(c, manifest, jobs);
  std::filesystem::create_directories(manifest.output_dir);
  write_table(manifest.output_dir / "metrics_table.json", run.table);
  {
    std::ofstream csv(manifest.output_dir / "metrics_per_record.csv", std::ios::binary);
    if (!csv) throw ConfigError("cannot write metrics_per_record.csv");
    write_metrics_csv(csv, run.rows);
  }
  write_json(manifest.output_dir / "manifest.json", manifest_to_json(manifest));
  return run;
}

// ---------------------------------------------------------------------------
// Judge stage

std::size_t JudgeRun::failure_count() const {
  std::size_t n = 0;
  for (const auto& m : per_model) n += m.failures.size();
  return n;
}

JudgeRun compute_judge(judge::ChatClient& client, const judge::JudgeConfig& config, const corpus::Corpus& corpus,
                       const RunManifest& manifest, judge::AuditLog* audit) {
  const auto models = selected_models(corpus, manifest);
  if (models.empty()) throw ValidationError("corpus has no candidate summaries to judge");
  const std::vector<Property> properties(kScoredProperties.begin(), kScoredProperties.end());

  std::unique_ptr<judge::RateLimiter> limiter;
  if (config.rate_limit_requests > 0) {
    limiter = std::make_unique<judge::RateLimiter>(config.rate_limit_requests, config.rate_limit_window);
  }

  JudgeRun run;
  stats::ModelPropertyTable table;
  table.family = stats::Family::judge;
  std::size_t n_min = 0;
  bool first = true;
  for (const auto& model : models) {
    auto scores = judge::score_corpus(client, config, corpus, model, properties, manifest.judge_protocol, audit,
                                      limiter.get());
    bool complete = true;
    for (auto p : properties) {
      if (scores.present_cells(p) == 0) {
        run.empty_properties.push_back(model + "/" + std::string(to_string(p)));
        complete = false;
      }
    }
    if (complete) {
      const auto agg = stats::aggregate(scores.partial_scores());
      table.rows.emplace_back(model, agg.mean);
      n_min = first ? agg.min_count() : std::min(n_min, agg.min_count());
      first = false;
    }
    run.per_model.push_back(std::move(scores));
  }
  if (run.empty_properties.empty()) {
    table.n_per_cell = n_min;
    table.validate();
    run.table = std::move(table);
  }
  return run;
}

void write_judge_csv(std::ostream& out, const std::vector<judge::CorpusScores>& per_model) {
  out << "record_id,model,conciseness,relevance,coherence,readability\n";
  for (const auto& m : per_model) {
    for (const auto& r : m.records) {
      out << csv_field(r.record_id) << ',' << csv_field(m.model_name);
      for (auto p : kScoredProperties) {
        out << ',';
        if (const auto it = r.cells.find(p); it != r.cells.end()) out << format_double(it->second);
      }
      out << '\n';
    }
  }
}

JudgeRun run_judge(judge::ChatClient& client, const judge::JudgeConfig& config, const RunManifest& manifest,
                   const corpus::WarningSink& warn) {
  config.validate();
  const auto c = prepare_corpus(manifest, warn);
  std::filesystem::create_directories(manifest.output_dir);
  std::ofstream audit_file(manifest.output_dir / "judge_audit.jsonl", std::ios::binary);
  if (!audit_file) throw ConfigError("cannot write judge_audit.jsonl");
  judge::AuditLog audit(audit_file);

  auto run = compute_judge(client, config, c, manifest, &audit);

  if (run.table) write_table(manifest.output_dir / "judge_table.json", *run.table);
  {
    std::ofstream csv(manifest.output_dir / "judge_per_record.csv", std::ios::binary);
    write_judge_csv(csv, run.per_model);
  }
  if (run.failure_count() > 0) {
    ojson failures = ojson::array();
    for (const auto& m : run.per_model) {
      for (const auto& f : m.failures) {
        failures.push_back({{"record_id", f.record_id},
                            {"model", m.model_name},
                            {"property", to_string(f.property)},
                            {"error", f.error}});
      }
    }
    write_json(manifest.output_dir / "judge_failures.json", failures);
  }
  write_json(manifest.output_dir / "manifest.json", manifest_to_json(manifest));
  return run;
}

// ---------------------------------------------------------------------------
// Correlation stage

ojson correlation_to_json(const std::vector<stats::CorrelationResult>& results) {
  ojson arr = ojson::array();
  std::size_t n = 0;
  for (const auto& r : results) {
    ojson e;
    e["property"] = to_string(r.property);
    e["n"] = r.n;
    e["r"] = r.r ? ojson(*r.r) : ojson(nullptr);
    e["p_value"] = r.p_value ? ojson(*r.p_value) : ojson(nullptr);
    if (!r.note.empty()) e["note"] = r.note;
    arr.push_back(std::move(e));
    n = r.n;
  }
  ojson j;
  j["n_models"] = n;
  j["results"] = std::move(arr);
  return j;
}

std::vector<stats::CorrelationResult> correlation_from_json(const ojson& j) {
  std::vector<stats::CorrelationResult> out;
  try {
    for (const auto& e : j.at("results")) {
      stats::CorrelationResult r;
      const auto p = parse_property(e.at("property").get<std::string>());
      if (!p) throw ValidationError("correlation: unknown property");
      r.property = *p;
      r.n = e.at("n").get<std::size_t>();
      if (!e.at("r").is_null()) r.r = e.at("r").get<double>();
      if (!e.at("p_value").is_null()) r.p_value = e.at("p_value").get<double>();
      if (e.contains("note")) r.note = e.at("note").get<std::string>();
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("correlation: ") + e.what());
  }
  return out;
}

std::string format_correlation_table(const std::vector<stats::CorrelationResult>& results) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %-24s %s\n", "Property", "Correlation coefficient", "P Value");
  out << line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-14s %-24s %s\n", capitalized(to_string(r.property)).c_str(),
                  r.r ? two_decimals(*r.r).c_str() : "n/a", r.p_value ? two_decimals(*r.p_value).c_str() : "n/a");
    out << line;
  }
  for (const auto& r : results) {
    if (!r.note.empty()) out << "note (" << to_string(r.property) << "): " << r.note << '\n';
  }
  return out.str();
}

std::string format_property_table(const stats::ModelPropertyTable& table) {
  std::ostringstream out;
  char line[200];
  out << "family: " << stats::to_string(table.family) << " (n per cell: " << table.n_per_cell << ")\n";
  std::snprintf(line, sizeof line, "%-16s %12s %12s %12s %12s\n", "Model", "Conciseness", "Relevance", "Coherence",
                "Readability");
  out << line;
  for (const auto& [model, s] : table.rows) {
    std::snprintf(line, sizeof line, "%-16s %12s %12s %12s %12s\n", model.c_str(), two_decimals(s.conciseness).c_str(),
                  two_decimals(s.relevance).c_str(), two_decimals(s.coherence).c_str(),
                  two_decimals(s.readability).c_str());
    out << line;
  }
  return out.str();
}

void write_plot_csv(std::ostream& out, const stats::ModelPropertyTable& metrics_table,
                    const stats::ModelPropertyTable& judge_table) {
  out << "model,property,family,score\n";
  for (const auto* table : {&metrics_table, &judge_table}) {
    for (const auto& [model, s] : table->rows) {
      for (auto p : kScoredProperties) {
        out << csv_field(model) << ',' << to_string(p) << ',' << stats::to_string(table->family) << ','
            << format_double(s.get(p)) << '\n';
      }
    }
  }
}

std::vector<stats::CorrelationResult> run_correlate(const std::filesystem::path& metrics_path,
                                                    const std::filesystem::path& judge_path,
                                                    const std::filesystem::path& out_dir) {
  const auto metrics_table = read_table(metrics_path);
  const auto judge_table = read_table(judge_path);
  auto results = stats::correlate_tables(metrics_table, judge_table);

  std::filesystem::create_directories(out_dir);
  write_json(out_dir / "correlation.json", correlation_to_json(results));
  {
    std::ofstream txt(out_dir / "correlation.txt", std::ios::binary);
    txt << format_correlation_table(results);
  }
  {
    std::ofstream csv(out_dir / "plot_data.csv", std::ios::binary);
    write_plot_csv(csv, metrics_table, judge_table);
  }
  return results;
}

}  // namespace summjudge::pipeline
