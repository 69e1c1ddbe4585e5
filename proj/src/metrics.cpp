#include "summjudge/metrics.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "summjudge/error.hpp"

namespace summjudge::metrics {
namespace {

using NGram = std::vector<std::string>;

std::map<NGram, std::size_t> count_ngrams(std::span<const std::string> tokens, std::size_t n) {
  std::map<NGram, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[NGram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

PRF make_prf(std::size_t overlap, std::size_t candidate_total, std::size_t reference_total) {
  PRF out;
  if (candidate_total == 0 || reference_total == 0) return out;
  out.precision = static_cast<double>(overlap) / static_cast<double>(candidate_total);
  out.recall = static_cast<double>(overlap) / static_cast<double>(reference_total);
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

}  // namespace

std::string_view to_string(RougeVariant v) {
  switch (v) {
    case RougeVariant::rouge1: return "1";
    case RougeVariant::rouge2: return "2";
    case RougeVariant::rougeL: return "L";
    case RougeVariant::mean: return "mean";
  }
  return "mean";
}

std::optional<RougeVariant> parse_rouge_variant(std::string_view name) {
  if (name == "1") return RougeVariant::rouge1;
  if (name == "2") return RougeVariant::rouge2;
  if (name == "L" || name == "l") return RougeVariant::rougeL;
  if (name == "mean") return RougeVariant::mean;
  return std::nullopt;
}

std::string_view to_string(RougeTarget t) { return t == RougeTarget::reference ? "reference" : "article"; }

std::optional<RougeTarget> parse_rouge_target(std::string_view name) {
  if (name == "reference") return RougeTarget::reference;
  if (name == "article") return RougeTarget::article;
  return std::nullopt;
}

double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  return denom == 0.0 ? 0.0 : 2.0 * precision * recall / denom;
}

double compression_ratio(std::string_view summary, std::string_view article) {
  const auto article_words = textproc::word_count(article);
  if (article_words == 0) throw ValidationError("article has no word tokens");
  return static_cast<double>(textproc::word_count(summary)) / static_cast<double>(article_words);
}

PRF rouge_n_tokens(std::span<const std::string> candidate, std::span<const std::string> reference, std::size_t n) {
  if (n < 1) throw ValidationError("ROUGE-N needs n >= 1");
  if (candidate.size() < n || reference.size() < n) return {};
  const auto cand = count_ngrams(candidate, n);
  const auto ref = count_ngrams(reference, n);
  std::size_t overlap = 0;
  for (const auto& [gram, c] : cand) {
    if (const auto it = ref.find(gram); it != ref.end()) overlap += std::min(c, it->second);
  }
  return make_prf(overlap, candidate.size() - n + 1, reference.size() - n + 1);
}

PRF rouge_n(std::string_view candidate, std::string_view reference, std::size_t n) {
  const auto c = textproc::tokenize_words(candidate);
  const auto r = textproc::tokenize_words(reference);
  return rouge_n_tokens(c, r, n);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

PRF rouge_l_tokens(std::span<const std::string> candidate, std::span<const std::string> reference) {
  return make_prf(lcs_length(candidate, reference), candidate.size(), reference.size());
}

PRF rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = textproc::tokenize_words(candidate);
  const auto r = textproc::tokenize_words(reference);
  return rouge_l_tokens(c, r);
}

RougeScores rouge(std::string_view candidate, std::string_view reference) {
  const auto c = textproc::tokenize_words(candidate);
  const auto r = textproc::tokenize_words(reference);
  return {rouge_n_tokens(c, r, 1), rouge_n_tokens(c, r, 2), rouge_l_tokens(c, r)};
}

double relevance_value(const RougeScores& scores, RougeVariant variant) {
  switch (variant) {
    case RougeVariant::rouge1: return scores.rouge1.f1;
    case RougeVariant::rouge2: return scores.rouge2.f1;
    case RougeVariant::rougeL: return scores.rougeL.f1;
    case RougeVariant::mean: break;
  }
  return (scores.rouge1.f1 + scores.rouge2.f1 + scores.rougeL.f1) / 3.0;
}

Readability readability(std::string_view text, const textproc::AbbreviationList& abbreviations) {
  const auto t = textproc::analyze(text, abbreviations);
  if (t.words.empty() || t.sentences.empty()) throw ValidationError("empty summary");
  Readability out;
  out.words = t.words.size();
  out.sentences = t.sentences.size();
  out.syllables = t.total_syllables();
  const double words_per_sentence = static_cast<double>(out.words) / static_cast<double>(out.sentences);
  const double syllables_per_word = static_cast<double>(out.syllables) / static_cast<double>(out.words);
  out.reading_ease = 206.835 - 1.015 * words_per_sentence - 84.6 * syllables_per_word;
  out.grade_level = 0.39 * words_per_sentence + 11.8 * syllables_per_word - 15.59;
  return out;
}

double flesch_reading_ease(std::string_view summary, const textproc::AbbreviationList& abbreviations) {
  return readability(summary, abbreviations).reading_ease;
}

MetricScores evaluate(std::string_view summary, std::string_view article, std::string_view reference,
                      const MetricConfig& config, const textproc::AbbreviationList& abbreviations) {
  MetricScores out;
  out.compression_ratio = compression_ratio(summary, article);
  out.rouge = rouge(summary, config.rouge_target == RougeTarget::reference ? reference : article);
  out.coherence = coherence::coherence_score(summary, config.lsa_rank, config.lsa_weighting, abbreviations);
  out.readability = readability(summary, abbreviations);

  out.normalized.conciseness = stats::normalize_conciseness(out.compression_ratio);
  out.normalized.relevance = relevance_value(out.rouge, config.rouge_variant);
  out.normalized.coherence = out.coherence;
  out.normalized.readability = stats::normalize_readability(out.readability.reading_ease);
  return out;
}

}  // namespace summjudge::metrics
