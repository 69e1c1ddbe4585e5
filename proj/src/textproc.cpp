#include "summjudge/textproc.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <utility>

#include "summjudge/error.hpp"

namespace summjudge::textproc {
namespace {

enum class CharClass { Word, Apostrophe, Separator };

struct CodePoint {
  CharClass cls;
  std::size_t length;
};

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 1;  // stray continuation or invalid byte
}

bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char to_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

CodePoint classify(std::string_view text, std::size_t pos) {
  const auto c = static_cast<unsigned char>(text[pos]);
  if (c < 0x80) {
    if (is_ascii_alnum(c)) return {CharClass::Word, 1};
    if (c == '\'') return {CharClass::Apostrophe, 1};
    return {CharClass::Separator, 1};
  }
  const std::size_t len = std::min(utf8_length(c), text.size() - pos);
  if (len == 1) return {CharClass::Separator, 1};
  const auto c1 = static_cast<unsigned char>(text[pos + 1]);
  // U+00A0..U+00BF: NBSP and Latin-1 punctuation.
  if (c == 0xC2 && c1 >= 0xA0) return {CharClass::Separator, len};
  if (c == 0xE2 && len == 3) {
    const auto c2 = static_cast<unsigned char>(text[pos + 2]);
    if (c1 == 0x80 && c2 == 0x99) return {CharClass::Apostrophe, 3};  // U+2019
    // U+2000..U+206F
    if (c1 == 0x80 || (c1 == 0x81 && c2 <= 0xAF)) return {CharClass::Separator, 3};
  }
  return {CharClass::Word, len};
}

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool is_closer(std::string_view text, std::size_t pos, std::size_t& len) {
  const char c = text[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']' || c == '}') {
    len = 1;
    return true;
  }
  // U+2019 and U+201D
  if (text.substr(pos, 3) == "\xE2\x80\x99" || text.substr(pos, 3) == "\xE2\x80\x9D") {
    len = 3;
    return true;
  }
  return false;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string normalize_abbreviation(std::string_view entry) {
  std::string out;
  for (char c : trim(entry)) out.push_back(to_lower(c));
  if (!out.empty() && out.back() != '.') out.push_back('.');
  return out;
}

const std::vector<std::string> kBuiltinAbbreviations = {
    // titles
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "rev", "hon", "gen", "gov", "sen", "rep",
    "pres", "lt", "col", "sgt", "capt", "cmdr", "adm", "maj", "cpl", "fr", "supt", "det", "insp",
    // organisations
    "inc", "ltd", "co", "corp", "bros", "dept", "univ", "assn",
    // months
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
    // latin and misc
    "e.g", "i.e", "vs", "cf", "approx", "est", "no", "nos", "vol", "fig", "al", "ave", "blvd", "mt",
    // initialisms
    "u.s", "u.k", "u.n", "e.u", "u.s.a", "d.c", "a.m", "p.m"};

}  // namespace

const AbbreviationList& AbbreviationList::builtin() {
  static const AbbreviationList list(kBuiltinAbbreviations);
  return list;
}

AbbreviationList::AbbreviationList(const std::vector<std::string>& entries) {
  for (const auto& e : entries) {
    auto norm = normalize_abbreviation(e);
    if (norm.size() > 1) entries_.insert(std::move(norm));
  }
}

AbbreviationList AbbreviationList::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open abbreviation list: " + path.string());
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    entries.emplace_back(t);
  }
  return AbbreviationList(entries);
}

bool AbbreviationList::contains(std::string_view word) const {
  // Drop leading quotes and brackets.
  while (!word.empty() && !is_ascii_alnum(static_cast<unsigned char>(word.front()))) {
    word.remove_prefix(1);
  }
  return entries_.count(normalize_abbreviation(word)) != 0;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto cp = classify(text, pos);
    switch (cp.cls) {
      case CharClass::Word:
        if (cp.length == 1) {
          current.push_back(to_lower(text[pos]));
        } else {
          current.append(text.substr(pos, cp.length));
        }
        break;
      case CharClass::Apostrophe: {
        const std::size_t next = pos + cp.length;
        const bool inner = !current.empty() && next < text.size() &&
                           classify(text, next).cls == CharClass::Word;
        if (!inner && !current.empty()) words.push_back(std::exchange(current, {}));
        break;
      }
      case CharClass::Separator:
        if (!current.empty()) words.push_back(std::exchange(current, {}));
        break;
    }
    pos += cp.length;
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::size_t word_count(std::string_view text) { return tokenize_words(text).size(); }

std::vector<std::string> split_sentences(std::string_view text, const AbbreviationList& abbreviations) {
  std::vector<std::string> sentences;
  auto emit = [&](std::string_view piece) {
    piece = trim(piece);
    if (!piece.empty()) sentences.emplace_back(piece);
  };

  std::size_t start = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    if (c != '.' && c != '!' && c != '?') {
      ++pos;
      continue;
    }
    const std::size_t run_begin = pos;
    while (pos < text.size() && (text[pos] == '.' || text[pos] == '!' || text[pos] == '?')) ++pos;
    const std::size_t run_end = pos;
    std::size_t closer_len = 0;
    while (pos < text.size() && is_closer(text, pos, closer_len)) pos += closer_len;
    if (pos < text.size() && !is_space(text[pos])) continue;

    if (run_end - run_begin == 1 && text[run_begin] == '.') {
      std::size_t chunk_begin = run_begin;
      while (chunk_begin > start && !is_space(text[chunk_begin - 1])) --chunk_begin;
      if (abbreviations.contains(text.substr(chunk_begin, run_end - chunk_begin))) continue;
    }
    emit(text.substr(start, pos - start));
    start = pos;
  }
  if (start < text.size()) emit(text.substr(start));
  return sentences;
}

std::size_t count_syllables(std::string_view word) {
  std::string w;
  w.reserve(word.size());
  for (char c : word) {
    if (static_cast<unsigned char>(c) < 0x80) w.push_back(to_lower(c));
  }

  std::size_t groups = 0;
  bool in_group = false;
  for (char c : w) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }

  const std::size_t n = w.size();
  if (n >= 2 && w[n - 1] == 'e' && !is_vowel(w[n - 2])) {
    const bool consonant_le =
        n >= 3 && w[n - 2] == 'l' && is_ascii_alnum(static_cast<unsigned char>(w[n - 3])) &&
        !is_vowel(w[n - 3]);
    if (!consonant_le && groups > 1) --groups;
  }
  return std::max<std::size_t>(groups, 1);
}

std::size_t TokenizedText::total_syllables() const {
  return std::accumulate(syllables_per_word.begin(), syllables_per_word.end(), std::size_t{0});
}

TokenizedText analyze(std::string_view text, const AbbreviationList& abbreviations) {
  TokenizedText out;
  out.words = tokenize_words(text);
  out.sentences = split_sentences(text, abbreviations);
  out.syllables_per_word.reserve(out.words.size());
  for (const auto& w : out.words) out.syllables_per_word.push_back(count_syllables(w));
  return out;
}

}  // namespace summjudge::textproc
