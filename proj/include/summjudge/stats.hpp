#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "summjudge/property.hpp"

namespace summjudge::stats {

/// The four scored properties, each normalized to [0, 1].
struct PropertyScores {
  double conciseness = 0.0;
  double relevance = 0.0;
  double coherence = 0.0;
  double readability = 0.0;

  double get(Property p) const;
  void set(Property p, double value);

  bool operator==(const PropertyScores&) const = default;
};

/// Per-record scores where any cell may be absent (failed judge call).
struct PartialScores {
  std::optional<double> conciseness;
  std::optional<double> relevance;
  std::optional<double> coherence;
  std::optional<double> readability;

  static PartialScores from(const PropertyScores& s);
  std::optional<double> get(Property p) const;
  void set(Property p, std::optional<double> value);
};

enum class Family { metrics, judge };

std::string_view to_string(Family f);
std::optional<Family> parse_family(std::string_view name);

/// Per-model mean scores for one evaluation family. Rows keep insertion order.
struct ModelPropertyTable {
  Family family = Family::metrics;
  std::size_t n_per_cell = 1;
  std::vector<std::pair<std::string, PropertyScores>> rows;

  const PropertyScores* find(const std::string& model) const;
  std::vector<std::string> model_names() const;
  /// Throws ValidationError when a cell leaves [0, 1] or n_per_cell is 0.
  void validate() const;

  bool operator==(const ModelPropertyTable&) const = default;
};

struct CorrelationResult {
  Property property = Property::conciseness;
  std::size_t n = 0;
  /// Absent when the data cannot define it; `note` then says why.
  std::optional<double> r;
  std::optional<double> p_value;
  std::string note;
};

/// clamp(1 - CR, 0, 1).
double normalize_conciseness(double compression_ratio);

/// clamp(FRE, 0, 100) / 100.
double normalize_readability(double flesch_reading_ease);

struct Aggregate {
  PropertyScores mean;
  std::array<std::size_t, 4> counts{};  // indexed like kScoredProperties

  std::size_t min_count() const;
};

/// Arithmetic mean of present cells per property. Throws ValidationError if a
/// property has no present value.
Aggregate aggregate(std::span<const PartialScores> scores);

/// Pearson correlation. Throws ValidationError on length mismatch, fewer
/// than two points, or a constant vector.
double pearson_r(std::span<const double> x, std::span<const double> y);

/// Regularized incomplete beta I_x(a, b).
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_tailed(double t, double df);

/// Two-tailed p-value for a Pearson r over n pairs (t-test, df = n - 2).
double p_value_two_tailed(double r, std::size_t n);

/// Pairs per-model cells in the metrics table's model order. Requires equal
/// model sets and at least two models. Properties that cannot be correlated
/// (constant column, fewer than three models for p) come back with the
/// missing value absent and a note.
std::vector<CorrelationResult> correlate_tables(const ModelPropertyTable& metrics_table,
                                                const ModelPropertyTable& judge_table);

}  // namespace summjudge::stats
