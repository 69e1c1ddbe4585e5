#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "summjudge/coherence.hpp"
#include "summjudge/corpus.hpp"
#include "summjudge/error.hpp"
#include "summjudge/judge.hpp"
#include "summjudge/metrics.hpp"
#include "summjudge/pipeline.hpp"
#include "summjudge/stats.hpp"
#include "summjudge/textproc.hpp"

namespace py = pybind11;
namespace sj = summjudge;

namespace {

py::dict prf_dict(const sj::metrics::PRF& p) {
  py::dict d;
  d["precision"] = p.precision;
  d["recall"] = p.recall;
  d["f1"] = p.f1;
  return d;
}

py::dict scores_dict(const sj::stats::PropertyScores& s) {
  py::dict d;
  for (auto p : sj::kScoredProperties) d[py::str(std::string(sj::to_string(p)))] = s.get(p);
  return d;
}

sj::Property property_arg(const std::string& name) {
  const auto p = sj::parse_property(name);
  if (!p) throw sj::ValidationError("unknown property: " + name);
  return *p;
}

sj::judge::Protocol protocol_arg(const std::string& name) {
  const auto p = sj::judge::parse_protocol(name);
  if (!p) throw sj::ValidationError("unknown protocol: " + name);
  return *p;
}

sj::coherence::Weighting weighting_arg(const std::string& name) {
  const auto w = sj::coherence::parse_weighting(name);
  if (!w) throw sj::ValidationError("unknown weighting: " + name);
  return *w;
}

// {model: {property: value}} in insertion order.
sj::stats::ModelPropertyTable table_arg(const py::dict& rows, sj::stats::Family family, std::size_t n_per_cell) {
  sj::stats::ModelPropertyTable t;
  t.family = family;
  t.n_per_cell = n_per_cell;
  for (const auto& [model, cells] : rows) {
    sj::stats::PropertyScores s;
    const auto cell_map = cells.cast<py::dict>();
    for (auto p : sj::kScoredProperties) {
      const py::str key(std::string(sj::to_string(p)));
      if (!cell_map.contains(key)) {
        throw sj::ValidationError("model '" + model.cast<std::string>() + "' lacks " + std::string(sj::to_string(p)));
      }
      s.set(p, cell_map[key].cast<double>());
    }
    t.rows.emplace_back(model.cast<std::string>(), s);
  }
  t.validate();
  return t;
}

py::list correlation_list(const std::vector<sj::stats::CorrelationResult>& results) {
  py::list out;
  for (const auto& r : results) {
    py::dict d;
    d["property"] = std::string(sj::to_string(r.property));
    d["n"] = r.n;
    d["r"] = r.r ? py::cast(*r.r) : py::none();
    d["p_value"] = r.p_value ? py::cast(*r.p_value) : py::none();
    d["note"] = r.note;
    out.append(std::move(d));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_summjudge, m) {
  m.doc() = "Summary evaluation with traditional metrics and an LLM judge";
  m.attr("__version__") = std::string(sj::pipeline::tool_version());

  auto base = py::register_exception<sj::Error>(m, "Error");
  py::register_exception<sj::ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<sj::CorpusError>(m, "CorpusError", base.ptr());
  py::register_exception<sj::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<sj::NumericalError>(m, "NumericalError", base.ptr());

  // Text processing
  m.def("tokenize_words", &sj::textproc::tokenize_words, py::arg("text"));
  m.def("split_sentences", [](const std::string& text) {
    return sj::textproc::split_sentences(text, sj::textproc::AbbreviationList::builtin());
  }, py::arg("text"));
  m.def("count_syllables", &sj::textproc::count_syllables, py::arg("word"));

  // Metrics
  m.def("compression_ratio", &sj::metrics::compression_ratio, py::arg("summary"), py::arg("article"));
  m.def("rouge_n", [](const std::string& c, const std::string& r, std::size_t n) {
    return prf_dict(sj::metrics::rouge_n(c, r, n));
  }, py::arg("candidate"), py::arg("reference"), py::arg("n"));
  m.def("rouge_l", [](const std::string& c, const std::string& r) { return prf_dict(sj::metrics::rouge_l(c, r)); },
        py::arg("candidate"), py::arg("reference"));
  m.def("flesch_reading_ease", [](const std::string& s) { return sj::metrics::flesch_reading_ease(s); },
        py::arg("summary"));
  m.def("readability", [](const std::string& s) {
    const auto r = sj::metrics::readability(s);
    py::dict d;
    d["reading_ease"] = r.reading_ease;
    d["grade_level"] = r.grade_level;
    d["words"] = r.words;
    d["sentences"] = r.sentences;
    d["syllables"] = r.syllables;
    return d;
  }, py::arg("text"));
  m.def("coherence_score", [](const std::string& s, std::size_t k, const std::string& weighting) {
    return sj::coherence::coherence_score(s, k, weighting_arg(weighting));
  }, py::arg("summary"), py::arg("k") = sj::coherence::kDefaultRank, py::arg("weighting") = "tf");
  m.def("singular_values", [](const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw sj::ValidationError("empty matrix");
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size()) throw sj::ValidationError("ragged matrix");
      for (std::size_t j = 0; j < rows[i].size(); ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    const auto s = sj::coherence::jacobi_svd(a);
    return std::vector<double>(s.sigma.data(), s.sigma.data() + s.sigma.size());
  }, py::arg("matrix"));
  m.def("evaluate", [](const std::string& summary, const std::string& article, const std::string& reference,
                       const std::string& rouge_variant, const std::string& rouge_target, std::size_t lsa_rank,
                       const std::string& lsa_weighting) {
    sj::metrics::MetricConfig cfg;
    const auto v = sj::metrics::parse_rouge_variant(rouge_variant);
    const auto t = sj::metrics::parse_rouge_target(rouge_target);
    if (!v) throw sj::ValidationError("unknown rouge variant: " + rouge_variant);
    if (!t) throw sj::ValidationError("unknown rouge target: " + rouge_target);
    cfg.rouge_variant = *v;
    cfg.rouge_target = *t;
    cfg.lsa_rank = lsa_rank;
    cfg.lsa_weighting = weighting_arg(lsa_weighting);
    const auto s = sj::metrics::evaluate(summary, article, reference, cfg);
    py::dict d;
    d["compression_ratio"] = s.compression_ratio;
    d["rouge1"] = prf_dict(s.rouge.rouge1);
    d["rouge2"] = prf_dict(s.rouge.rouge2);
    d["rougeL"] = prf_dict(s.rouge.rougeL);
    d["coherence"] = s.coherence;
    d["flesch_reading_ease"] = s.readability.reading_ease;
    d["normalized"] = scores_dict(s.normalized);
    return d;
  }, py::arg("summary"), py::arg("article"), py::arg("reference"), py::arg("rouge_variant") = "mean",
     py::arg("rouge_target") = "reference", py::arg("lsa_rank") = sj::coherence::kDefaultRank,
     py::arg("lsa_weighting") = "tf");

  // Statistics
  m.def("normalize_conciseness", &sj::stats::normalize_conciseness, py::arg("compression_ratio"));
  m.def("normalize_readability", &sj::stats::normalize_readability, py::arg("flesch_reading_ease"));
  m.def("pearson_r", [](const std::vector<double>& x, const std::vector<double>& y) {
    return sj::stats::pearson_r(x, y);
  }, py::arg("x"), py::arg("y"));
  m.def("p_value_two_tailed", &sj::stats::p_value_two_tailed, py::arg("r"), py::arg("n"));
  m.def("student_t_two_tailed", &sj::stats::student_t_two_tailed, py::arg("t"), py::arg("df"));
  m.def("correlate_tables", [](const py::dict& metrics_rows, const py::dict& judge_rows) {
    return correlation_list(sj::stats::correlate_tables(table_arg(metrics_rows, sj::stats::Family::metrics, 1),
                                                        table_arg(judge_rows, sj::stats::Family::judge, 1)));
  }, py::arg("metrics_rows"), py::arg("judge_rows"));
  m.def("correlate_files", [](const std::string& metrics_path, const std::string& judge_path) {
    return correlation_list(sj::stats::correlate_tables(sj::pipeline::read_table(metrics_path),
                                                        sj::pipeline::read_table(judge_path)));
  }, py::arg("metrics_table"), py::arg("judge_table"));

  // Judge
  m.def("render_prompt", [](const std::string& protocol, const std::string& property, const std::string& article,
                            const std::string& summary) {
    return sj::judge::render_prompt(protocol_arg(protocol), property_arg(property), article, summary);
  }, py::arg("protocol"), py::arg("property"), py::arg("article"), py::arg("summary"));
  m.def("parse_verdict", [](const std::string& protocol, const std::string& response) {
    try {
      return sj::judge::parse_verdict(protocol_arg(protocol), response).value();
    } catch (const sj::judge::UnparseableResponse& e) {
      throw sj::ValidationError(e.what());
    }
  }, py::arg("protocol"), py::arg("response"));

  // Pipeline
  m.def("run_metrics", [](const std::string& corpus_path, const std::string& out_dir, std::size_t sample,
                          std::size_t max_words, std::size_t jobs) {
    sj::pipeline::RunManifest mf;
    mf.command = "metrics";
    mf.corpus_path = corpus_path;
    mf.output_dir = out_dir;
    mf.sample_size = sample;
    mf.max_words = max_words;
    mf.timestamp = sj::pipeline::current_timestamp();
    mf.version = std::string(sj::pipeline::tool_version());
    sj::pipeline::MetricsRun run;
    {
      py::gil_scoped_release release;
      run = sj::pipeline::run_metrics(mf, jobs);
    }
    py::dict rows;
    for (const auto& [model, s] : run.table.rows) rows[py::str(model)] = scores_dict(s);
    return rows;
  }, py::arg("corpus"), py::arg("out_dir"), py::arg("sample") = sj::corpus::kDefaultSampleSize,
     py::arg("max_words") = sj::corpus::kDefaultMaxWords, py::arg("jobs") = 1);
}
