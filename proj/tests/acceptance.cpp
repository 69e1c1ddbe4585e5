// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "summjudge/coherence.hpp"
#include "summjudge/judge.hpp"
#include "summjudge/metrics.hpp"
#include "summjudge/pipeline.hpp"
#include "summjudge/stats.hpp"

namespace fs = std::filesystem;
namespace sj = summjudge;

namespace {

const std::string kCli = SUMMJUDGE_CLI_PATH;
const std::string kData = SUMMJUDGE_DATA_DIR;
const std::string kSnapshots = SUMMJUDGE_SNAPSHOT_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + kCli + "\" " + args + " >\"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("summjudge-acceptance-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> random_tokens(std::mt19937& rng) {
  static const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e"};
  std::vector<std::string> out(rng() % 9);
  for (auto& t : out) t = alphabet[rng() % alphabet.size()];
  return out;
}

bool same_prf(const sj::metrics::PRF& a, const oracle::PRF& b) {
  return a.precision == b.precision && a.recall == b.recall && a.f1 == b.f1;
}

// 1
Outcome correlation_reproduction() {
  Outcome o;
  const auto out = scratch_dir("correlate");
  const auto start = std::chrono::steady_clock::now();
  const int code = run_cli("correlate --metrics \"" + kData + "/published_tables/metrics_table.json\" --judge \"" + kData +
                               "/published_tables/judge_table.json\" --out \"" + out.string() + "\"",
                           out / "log.txt");
  const double elapsed = seconds_since(start);
  o.require(code == 0, "correlate exited with " + std::to_string(code));
  if (!o.pass) return o;

  const auto results = sj::pipeline::correlation_from_json(sj::pipeline::read_json(out / "correlation.json"));
  const double want_r[] = {-0.65, 0.92, 0.85, 0.11};
  const double want_p[] = {0.17, 0.01, 0.03, 0.83};
  o.require(results.size() == 4, "expected four properties");
  for (std::size_t i = 0; i < results.size() && i < 4; ++i) {
    const auto& r = results[i];
    const std::string name(sj::to_string(r.property));
    o.require(r.property == sj::kScoredProperties[i], "unexpected property order");
    o.require(r.r && std::fabs(*r.r - want_r[i]) <= 0.005, name + " r out of tolerance");
    o.require(r.p_value && std::fabs(*r.p_value - want_p[i]) <= 0.01, name + " p out of tolerance");
  }
  o.require(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
  if (o.pass) {
    std::ostringstream d;
    d.precision(4);
    for (const auto& r : results) d << sj::to_string(r.property) << " r=" << *r.r << " p=" << *r.p_value << "; ";
    d << elapsed << " s";
    o.detail = d.str();
  }
  return o;
}

// 2
Outcome rouge_oracle() {
  Outcome o;
  std::mt19937 rng(20240601);
  const auto start = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const auto cand = random_tokens(rng);
    const auto ref = random_tokens(rng);
    o.require(same_prf(sj::metrics::rouge_n_tokens(cand, ref, 1), oracle::rouge_n(cand, ref, 1)),
              "rouge-1 mismatch at trial " + std::to_string(trial));
    o.require(same_prf(sj::metrics::rouge_n_tokens(cand, ref, 2), oracle::rouge_n(cand, ref, 2)),
              "rouge-2 mismatch at trial " + std::to_string(trial));
    o.require(same_prf(sj::metrics::rouge_l_tokens(cand, ref), oracle::rouge_l(cand, ref)),
              "rouge-L mismatch at trial " + std::to_string(trial));
  }
  const double elapsed = seconds_since(start);
  o.require(elapsed < 10.0, "took " + std::to_string(elapsed) + " s");
  if (o.pass) o.detail = "1000 pairs, " + std::to_string(elapsed) + " s";
  return o;
}

// 3
Outcome svd_oracle() {
  Outcome o;
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> real(-1.0, 1.0);
  std::uniform_int_distribution<int> count(0, 3);
  double worst_sigma = 0.0;
  double worst_coherence = 0.0;
  for (int trial = 0; trial < 200 && o.pass; ++trial) {
    const Eigen::Index rows = 1 + rng() % 8;
    const Eigen::Index cols = 1 + rng() % 8;
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = real(rng);
    }
    const auto want = oracle::singular_values(a);
    const auto got = sj::coherence::reduce_svd(a, static_cast<std::size_t>(want.size()));
    o.require(got.singular_values.size() == want.size(), "rank differs at trial " + std::to_string(trial));
    for (Eigen::Index i = 0; i < want.size() && o.pass; ++i) {
      const double err = std::fabs(got.singular_values(i) - want(i));
      worst_sigma = std::max(worst_sigma, err);
      o.require(err <= 1e-8, "singular value off by " + std::to_string(err));
    }

    // Term-sentence counts; every sentence has at least one term.
    Eigen::MatrixXd tsm(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) tsm(i, j) = count(rng);
    }
    for (Eigen::Index j = 0; j < cols; ++j) tsm(j % rows, j) += 1.0;
    const double base = sj::coherence::coherence_from_matrix(tsm);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(rows);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + rows, rng);
    const double scale = 0.1 + 10.0 * std::fabs(real(rng));
    for (double v : {sj::coherence::coherence_from_matrix(perm * tsm), sj::coherence::coherence_from_matrix(scale * tsm)}) {
      worst_coherence = std::max(worst_coherence, std::fabs(v - base));
      o.require(std::fabs(v - base) <= 1e-10, "coherence changed under permutation or scaling");
    }
  }

  // The same invariance through the text interface: renaming every word.
  const std::string text = "Storms hit the coast. The coast lost power. Crews restored power by night.";
  const std::string renamed = "Zorps qim xe vorn. Xe vorn yup bex. Plaks grond bex fi tull.";
  const double t1 = sj::coherence::coherence_score(text);
  const double t2 = sj::coherence::coherence_score(renamed);
  o.require(std::fabs(t1 - t2) <= 1e-10, "coherence_score changed when words were renamed");
  if (o.pass) {
    std::ostringstream d;
    d << "200 matrices, max sigma error " << worst_sigma << ", max coherence drift " << worst_coherence;
    o.detail = d.str();
  }
  return o;
}

// 4
Outcome flesch_check() {
  Outcome o;
  const double fre = sj::metrics::flesch_reading_ease("The cat sat.");
  o.require(std::fabs(fre - 119.19) <= 1e-9, "FRE = " + std::to_string(fre));
  o.require(sj::stats::normalize_readability(fre) == 1.0, "normalized readability is not 1.0");
  if (o.pass) {
    std::ostringstream d;
    d.precision(17);
    d << "FRE = " << fre;
    o.detail = d.str();
  }
  return o;
}

// 5
Outcome statistical_invariants() {
  Outcome o;
  std::mt19937 rng(4242);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 500 && o.pass; ++trial) {
    const std::size_t n = 3 + rng() % 20;
    std::vector<double> x(n), y(n), ax(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = normal(rng);
      y[i] = normal(rng);
    }
    double a = normal(rng);
    if (std::fabs(a) < 0.05) a = 0.5;
    const double b = normal(rng);
    for (std::size_t i = 0; i < n; ++i) ax[i] = a * x[i] + b;
    const double r = sj::stats::pearson_r(x, y);
    o.require(std::fabs(r - sj::stats::pearson_r(y, x)) <= 1e-12, "pearson_r not symmetric");
    o.require(std::fabs(r) <= 1.0, "|r| > 1");
    const double want = a > 0 ? r : -r;
    o.require(std::fabs(sj::stats::pearson_r(ax, y) - want) <= 1e-9, "affine equivariance violated");
  }
  for (std::size_t n : {4u, 6u, 10u, 30u}) {
    double last = 1.0 + 1e-12;
    for (int i = 0; i <= 99 && o.pass; ++i) {
      const double r = i / 100.0;
      const double p = sj::stats::p_value_two_tailed(r, n);
      o.require(p < last, "p not decreasing in |r| at n=" + std::to_string(n));
      o.require(std::fabs(p - sj::stats::p_value_two_tailed(-r, n)) <= 1e-14, "p not symmetric in r");
      last = p;
    }
  }
  const double p = sj::stats::student_t_two_tailed(2.776, 4.0);
  const double q = oracle::t_two_tailed_by_quadrature(2.776, 4.0);
  o.require(std::fabs(p - 0.05) <= 0.001, "t tail = " + std::to_string(p));
  o.require(std::fabs(p - q) <= 0.001, "t tail disagrees with quadrature");
  if (o.pass) {
    std::ostringstream d;
    d.precision(6);
    d << "t=2.776 df=4: p=" << p << ", quadrature " << q;
    o.detail = d.str();
  }
  return o;
}

// 6
Outcome offline_end_to_end() {
  Outcome o;
  const auto root = scratch_dir("e2e");
  const std::string corpus = kData + "/examples/corpus_small.jsonl";
  const std::string script = kData + "/examples/mock_script.txt";
  const auto metrics_dir = root / "metrics";
  const auto judge_dir = root / "judge";
  const auto corr_dir = root / "correlation";
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);

  const auto start = std::chrono::steady_clock::now();
  int code = run_cli("metrics --corpus \"" + corpus + "\" --out \"" + metrics_dir.string() + "\"", root / "m1.log");
  o.require(code == 0, "metrics exited with " + std::to_string(code));
  std::vector<std::string> first;
  const std::vector<std::string> files = {"metrics_table.json", "metrics_per_record.csv", "manifest.json"};
  for (const auto& f : files) first.push_back(slurp(metrics_dir / f));

  code = run_cli("judge --corpus \"" + corpus + "\" --mock-script \"" + script + "\" --backoff-ms 0 --out \"" +
                     judge_dir.string() + "\"",
                 root / "j.log");
  o.require(code == 0, "judge exited with " + std::to_string(code));
  code = run_cli("correlate --metrics \"" + (metrics_dir / "metrics_table.json").string() + "\" --judge \"" +
                     (judge_dir / "judge_table.json").string() + "\" --out \"" + corr_dir.string() + "\"",
                 root / "c.log");
  o.require(code == 0, "correlate exited with " + std::to_string(code));

  code = run_cli("metrics --corpus \"" + corpus + "\" --out \"" + metrics_dir.string() + "\"", root / "m2.log");
  o.require(code == 0, "metrics rerun exited with " + std::to_string(code));
  const double elapsed = seconds_since(start);
  for (std::size_t i = 0; i < files.size(); ++i) {
    o.require(!first[i].empty() && slurp(metrics_dir / files[i]) == first[i], files[i] + " differs between runs");
  }
  if (!o.pass) return o;

  std::size_t cells = 0;
  for (const auto& path : {metrics_dir / "metrics_table.json", judge_dir / "judge_table.json"}) {
    const auto table = sj::pipeline::read_table(path);
    o.require(table.rows.size() == 2, path.filename().string() + " does not have two models");
    for (const auto& [model, s] : table.rows) {
      for (auto p : sj::kScoredProperties) {
        o.require(s.get(p) >= 0.0 && s.get(p) <= 1.0, model + " cell out of [0, 1]");
        ++cells;
      }
    }
  }
  o.require(fs::exists(corr_dir / "correlation.json"), "correlation.json missing");
  o.require(elapsed < 5.0, "took " + std::to_string(elapsed) + " s");
  if (o.pass) o.detail = std::to_string(cells) + " cells in [0, 1], " + std::to_string(elapsed) + " s";
  return o;
}

// 7
Outcome prompt_fidelity() {
  Outcome o;
  using sj::judge::Protocol;
  const std::string note =
      " Note that \"consistency\" refers to how much information included in the summary is present in the source "
      "article.\nArticle: [Article]\nSummary: [Summary]\n";
  const std::string ask = "Please determine whether the provided summary is consistent with the corresponding article.";
  const std::pair<Protocol, std::string> exemplars[] = {
      {Protocol::zero_shot, ask + note + "Answer: (yes or no)"},
      {Protocol::chain_of_thought,
       ask + note + "Answer: Explain your reasoning step by step then answer the question (yes or no)"},
      {Protocol::score,
       "Score the following summary given the corresponding article with respect to consistency from 0 to 1 where 1 "
       "means most consistent." +
           note + "Score:"},
  };
  for (const auto& [protocol, want] : exemplars) {
    o.require(sj::judge::render_prompt(protocol, sj::Property::consistency, "[Article]", "[Summary]") == want,
              std::string(sj::judge::to_string(protocol)) + " consistency prompt differs from the exemplar");
  }
  std::size_t pinned = 0;
  for (auto protocol : {Protocol::zero_shot, Protocol::chain_of_thought, Protocol::score}) {
    for (auto property : sj::kAllProperties) {
      const std::string name = std::string(sj::judge::to_string(protocol)) + "_" + std::string(sj::to_string(property));
      const auto path = fs::path(kSnapshots) / (name + ".txt");
      o.require(fs::exists(path), "missing snapshot " + name);
      o.require(sj::judge::render_prompt(protocol, property, "[Article]", "[Summary]") == slurp(path),
                "prompt differs from snapshot " + name);
      ++pinned;
    }
  }
  if (o.pass) o.detail = "3 exemplars, " + std::to_string(pinned) + " snapshots";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 correlation reproduction", correlation_reproduction},
      {"2 ROUGE oracle equivalence", rouge_oracle},
      {"3 SVD oracle equivalence", svd_oracle},
      {"4 Flesch formula check", flesch_check},
      {"5 statistical invariants", statistical_invariants},
      {"6 offline end-to-end", offline_end_to_end},
      {"7 prompt fidelity", prompt_fidelity},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  (" << o.detail << ")\n";
  }
  fs::remove_all(fs::temp_directory_path() / ("summjudge-acceptance-" + std::to_string(::getpid())));
  return failures == 0 ? 0 : 1;
}
