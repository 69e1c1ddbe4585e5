#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace summjudge::corpus {

/// One article with its reference summary and candidate summaries keyed by
/// model name. `candidates` iterates in model-name order; the corpus keeps
/// the first-seen order separately in `Corpus::model_names`.
struct CorpusRecord {
  std::string id;
  std::string article;
  std::string reference_summary;
  std::map<std::string, std::string> candidates;

  bool operator==(const CorpusRecord&) const = default;
};

struct Corpus {
  std::vector<CorpusRecord> records;
  std::vector<std::string> model_names;

  std::size_t size() const { return records.size(); }
  bool has_model(const std::string& name) const;

  bool operator==(const Corpus&) const = default;
};

enum class CorpusFormat { jsonl };

using WarningSink = std::function<void(const std::string&)>;

/// Parses JSON Lines. Blank lines are skipped. Throws CorpusError naming the
/// offending line for malformed JSON, missing or mistyped fields, empty ids
/// or articles, and duplicate ids. Unknown keys go to `warn`.
Corpus parse_jsonl(std::istream& in, const WarningSink& warn = {});

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format = CorpusFormat::jsonl,
                   const WarningSink& warn = {});

/// Builds a corpus from records, validating ids and deriving model_names.
Corpus make_corpus(std::vector<CorpusRecord> records);

inline constexpr std::size_t kDefaultMaxWords = 512;
inline constexpr std::size_t kDefaultSampleSize = 30;

/// Keeps records whose article has at most `max_words` word tokens.
Corpus filter_by_word_limit(const Corpus& corpus, std::size_t max_words = kDefaultMaxWords);

/// First min(n, size) records, in order.
Corpus take_sample(const Corpus& corpus, std::size_t n = kDefaultSampleSize);

}  // namespace summjudge::corpus
