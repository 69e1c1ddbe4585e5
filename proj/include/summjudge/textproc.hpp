#pragma once

// Rule-based tokenization, sentence splitting and syllable estimation.
//
// Word rules (ASCII-oriented, UTF-8 tolerant):
//   * letters and digits form words and are lowercased;
//   * an apostrophe (' or U+2019) between two word characters is dropped
//     without splitting ("don't" -> "dont");
//   * every other ASCII character separates words, so hyphenated words
//     split ("state-of-the-art" -> state, of, the, art);
//   * bytes of non-ASCII code points are word characters, except the
//     General Punctuation block U+2000..U+206F, which separates.
//
// Sentence rules: a run of '.', '!' or '?' (plus any closing quotes or
// brackets) followed by whitespace or end of text ends a sentence, unless
// the terminator is a '.' closing a word on the abbreviation stop-list.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace summjudge::textproc {

class AbbreviationList {
 public:
  /// The built-in list (titles, common Latin forms, country initialisms).
  static const AbbreviationList& builtin();

  /// One entry per line; blank lines and lines starting with '#' are
  /// skipped. Entries are case-insensitive and the trailing '.' is optional.
  static AbbreviationList from_file(const std::filesystem::path& path);

  AbbreviationList() = default;
  explicit AbbreviationList(const std::vector<std::string>& entries);

  /// `word` is the whitespace-delimited chunk ending in '.', e.g. "Mr." or "(U.S.".
  bool contains(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_set<std::string> entries_;
};

std::vector<std::string> tokenize_words(std::string_view text);

std::size_t word_count(std::string_view text);

std::vector<std::string> split_sentences(std::string_view text,
                                         const AbbreviationList& abbreviations = AbbreviationList::builtin());

/// Vowel-group heuristic. Runs of [aeiouy] are counted; a silent terminal
/// 'e' is dropped unless the word ends in consonant + "le" (table, people).
/// Never less than 1.
std::size_t count_syllables(std::string_view word);

struct TokenizedText {
  std::vector<std::string> words;
  std::vector<std::string> sentences;
  std::vector<std::size_t> syllables_per_word;

  std::size_t total_syllables() const;
};

TokenizedText analyze(std::string_view text,
                      const AbbreviationList& abbreviations = AbbreviationList::builtin());

}  // namespace summjudge::textproc
