#include "summjudge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "summjudge/error.hpp"

namespace summjudge::stats {
namespace {

std::size_t scored_index(Property p) {
  switch (p) {
    case Property::conciseness: return 0;
    case Property::relevance: return 1;
    case Property::coherence: return 2;
    case Property::readability: return 3;
    case Property::consistency: break;
  }
  throw ValidationError("consistency is not one of the four scored properties");
}

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

}  // namespace

double PropertyScores::get(Property p) const {
  switch (scored_index(p)) {
    case 0: return conciseness;
    case 1: return relevance;
    case 2: return coherence;
    default: return readability;
  }
}

void PropertyScores::set(Property p, double value) {
  switch (scored_index(p)) {
    case 0: conciseness = value; break;
    case 1: relevance = value; break;
    case 2: coherence = value; break;
    default: readability = value; break;
  }
}

PartialScores PartialScores::from(const PropertyScores& s) {
  return {s.conciseness, s.relevance, s.coherence, s.readability};
}

std::optional<double> PartialScores::get(Property p) const {
  switch (scored_index(p)) {
    case 0: return conciseness;
    case 1: return relevance;
    case 2: return coherence;
    default: return readability;
  }
}

void PartialScores::set(Property p, std::optional<double> value) {
  switch (scored_index(p)) {
    case 0: conciseness = value; break;
    case 1: relevance = value; break;
    case 2: coherence = value; break;
    default: readability = value; break;
  }
}

std::string_view to_string(Family f) { return f == Family::metrics ? "metrics" : "judge"; }

std::optional<Family> parse_family(std::string_view name) {
  if (name == "metrics") return Family::metrics;
  if (name == "judge") return Family::judge;
  return std::nullopt;
}

const PropertyScores* ModelPropertyTable::find(const std::string& model) const {
  for (const auto& [name, scores] : rows) {
    if (name == model) return &scores;
  }
  return nullptr;
}

std::vector<std::string> ModelPropertyTable::model_names() const {
  std::vector<std::string> names;
  names.reserve(rows.size());
  for (const auto& [name, _] : rows) names.push_back(name);
  return names;
}

void ModelPropertyTable::validate() const {
  if (n_per_cell < 1) throw ValidationError("n_per_cell must be at least 1");
  std::set<std::string> seen;
  for (const auto& [name, scores] : rows) {
    if (!seen.insert(name).second) throw ValidationError("duplicate model '" + name + "' in table");
    for (auto p : kScoredProperties) {
      const double v = scores.get(p);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("cell " + name + "/" + std::string(summjudge::to_string(p)) +
                              " = " + std::to_string(v) + " is outside [0, 1]");
      }
    }
  }
}

double normalize_conciseness(double compression_ratio) {
  return std::clamp(1.0 - compression_ratio, 0.0, 1.0);
}

double normalize_readability(double flesch_reading_ease) {
  return std::clamp(flesch_reading_ease, 0.0, 100.0) / 100.0;
}

std::size_t Aggregate::min_count() const { return *std::min_element(counts.begin(), counts.end()); }

Aggregate aggregate(std::span<const PartialScores> scores) {
  Aggregate out;
  for (std::size_t i = 0; i < kScoredProperties.size(); ++i) {
    const Property p = kScoredProperties[i];
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : scores) {
      if (const auto v = s.get(p)) {
        sum += *v;
        ++n;
      }
    }
    if (n == 0) {
      throw ValidationError("no present values for property '" + std::string(summjudge::to_string(p)) + "'");
    }
    out.mean.set(p, sum / static_cast<double>(n));
    out.counts[i] = n;
  }
  return out;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("length mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < 2) throw ValidationError("pearson_r needs at least two points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("zero variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw ValidationError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("incomplete beta needs x in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double df) {
  if (!(df > 0.0)) throw ValidationError("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return std::clamp(regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t)), 0.0, 1.0);
}

double p_value_two_tailed(double r, std::size_t n) {
  if (n < 3) throw ValidationError("p-value needs at least 3 pairs, got " + std::to_string(n));
  if (std::isnan(r) || std::fabs(r) > 1.0) throw ValidationError("r must lie in [-1, 1]");
  if (std::fabs(r) == 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  return student_t_two_tailed(t, df);
}

std::vector<CorrelationResult> correlate_tables(const ModelPropertyTable& metrics_table,
                                                const ModelPropertyTable& judge_table) {
  const auto left = metrics_table.model_names();
  const auto right = judge_table.model_names();
  const std::set<std::string> lset(left.begin(), left.end());
  const std::set<std::string> rset(right.begin(), right.end());
  if (lset != rset) {
    std::string msg = "model sets differ;";
    for (const auto& m : lset) {
      if (!rset.count(m)) msg += " only in metrics table: " + m + ";";
    }
    for (const auto& m : rset) {
      if (!lset.count(m)) msg += " only in judge table: " + m + ";";
    }
    msg.pop_back();
    throw ModelSetMismatch(msg);
  }
  if (left.size() < 2) throw ValidationError("correlation needs at least two models");

  std::vector<CorrelationResult> results;
  for (auto p : kScoredProperties) {
    std::vector<double> xs, ys;
    for (const auto& model : left) {
      xs.push_back(metrics_table.find(model)->get(p));
      ys.push_back(judge_table.find(model)->get(p));
    }
    CorrelationResult res;
    res.property = p;
    res.n = left.size();
    try {
      res.r = pearson_r(xs, ys);
    } catch (const ValidationError& e) {
      res.note = e.what();
      results.push_back(std::move(res));
      continue;
    }
    if (res.n >= 3) {
      res.p_value = p_value_two_tailed(*res.r, res.n);
    } else {
      res.note = "p-value undefined for fewer than 3 models";
    }
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace summjudge::stats
