#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "summjudge/coherence.hpp"
#include "summjudge/stats.hpp"
#include "summjudge/textproc.hpp"

namespace summjudge::metrics {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const PRF&) const = default;
};

struct RougeScores {
  PRF rouge1;
  PRF rouge2;
  PRF rougeL;
};

enum class RougeVariant { rouge1, rouge2, rougeL, mean };
enum class RougeTarget { reference, article };

std::string_view to_string(RougeVariant v);
std::optional<RougeVariant> parse_rouge_variant(std::string_view name);
std::string_view to_string(RougeTarget t);
std::optional<RougeTarget> parse_rouge_target(std::string_view name);

/// 0 when precision + recall == 0, harmonic mean otherwise.
double f1_score(double precision, double recall);

/// word_count(summary) / word_count(article). Throws ValidationError when the
/// article has no word tokens.
double compression_ratio(std::string_view summary, std::string_view article);

/// Clipped n-gram overlap on token sequences. All zeros when either side has
/// fewer than n tokens.
PRF rouge_n_tokens(std::span<const std::string> candidate, std::span<const std::string> reference, std::size_t n);
PRF rouge_n(std::string_view candidate, std::string_view reference, std::size_t n);

/// LCS-based ROUGE on token sequences; empty input gives zeros.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);
PRF rouge_l_tokens(std::span<const std::string> candidate, std::span<const std::string> reference);
PRF rouge_l(std::string_view candidate, std::string_view reference);

RougeScores rouge(std::string_view candidate, std::string_view reference);

/// The scalar that represents relevance for a given variant (F1 values).
double relevance_value(const RougeScores& scores, RougeVariant variant);

struct Readability {
  double reading_ease = 0.0;
  double grade_level = 0.0;
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t syllables = 0;
};

/// Flesch Reading Ease and Flesch-Kincaid Grade Level. Throws
/// ValidationError for text without words.
Readability readability(std::string_view text,
                        const textproc::AbbreviationList& abbreviations = textproc::AbbreviationList::builtin());

double flesch_reading_ease(std::string_view summary,
                           const textproc::AbbreviationList& abbreviations = textproc::AbbreviationList::builtin());

struct MetricConfig {
  RougeVariant rouge_variant = RougeVariant::mean;
  RougeTarget rouge_target = RougeTarget::reference;
  std::size_t lsa_rank = coherence::kDefaultRank;
  coherence::Weighting lsa_weighting = coherence::Weighting::tf;

  bool operator==(const MetricConfig&) const = default;
};

struct MetricScores {
  double compression_ratio = 0.0;
  RougeScores rouge;
  double coherence = 0.0;
  Readability readability;
  stats::PropertyScores normalized;
};

/// All traditional metrics for one summary, plus their normalized property
/// scores. ROUGE compares against `reference` or `article` per config.
MetricScores evaluate(std::string_view summary, std::string_view article, std::string_view reference,
                      const MetricConfig& config = {},
                      const textproc::AbbreviationList& abbreviations = textproc::AbbreviationList::builtin());

}  // namespace summjudge::metrics
