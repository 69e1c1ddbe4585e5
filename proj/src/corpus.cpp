#include "summjudge/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "summjudge/error.hpp"
#include "summjudge/textproc.hpp"

namespace summjudge::corpus {
namespace {

using json = nlohmann::ordered_json;

std::string required_string(const json& obj, const char* field, std::size_t line) {
  const auto it = obj.find(field);
  if (it == obj.end()) throw CorpusError(std::string("missing field '") + field + "'", line);
  if (!it->is_string()) throw CorpusError(std::string("field '") + field + "' must be a string", line);
  return it->get<std::string>();
}

std::vector<std::string> derive_model_names(const std::vector<CorpusRecord>& records) {
  std::vector<std::string> names;
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    for (const auto& [name, _] : r.candidates) {
      if (seen.insert(name).second) names.push_back(name);
    }
  }
  return names;
}

// Keeps the parent's first-seen order, restricted to models still present.
std::vector<std::string> surviving_models(const Corpus& parent, const std::vector<CorpusRecord>& records) {
  std::unordered_set<std::string> present;
  for (const auto& r : records) {
    for (const auto& [name, _] : r.candidates) present.insert(name);
  }
  std::vector<std::string> names;
  for (const auto& n : parent.model_names) {
    if (present.count(n)) names.push_back(n);
  }
  return names;
}

}  // namespace

bool Corpus::has_model(const std::string& name) const {
  return std::find(model_names.begin(), model_names.end(), name) != model_names.end();
}

Corpus parse_jsonl(std::istream& in, const WarningSink& warn) {
  Corpus corpus;
  std::unordered_map<std::string, std::size_t> id_lines;
  std::unordered_set<std::string> seen_models;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;

    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw CorpusError(std::string("malformed JSON: ") + e.what(), line);
    }
    if (!obj.is_object()) throw CorpusError("record must be a JSON object", line);

    CorpusRecord rec;
    rec.id = required_string(obj, "id", line);
    rec.article = required_string(obj, "article", line);
    rec.reference_summary = required_string(obj, "reference_summary", line);
    if (rec.id.empty()) throw CorpusError("field 'id' is empty", line);
    if (rec.article.empty()) throw CorpusError("field 'article' is empty", line);

    const auto cand = obj.find("candidates");
    if (cand == obj.end()) throw CorpusError("missing field 'candidates'", line);
    if (!cand->is_object()) throw CorpusError("field 'candidates' must be an object", line);
    for (const auto& [model, summary] : cand->items()) {
      if (!summary.is_string()) {
        throw CorpusError("candidate '" + model + "' must be a string", line);
      }
      rec.candidates.emplace(model, summary.get<std::string>());
      if (seen_models.insert(model).second) corpus.model_names.push_back(model);
    }

    for (const auto& [key, _] : obj.items()) {
      if (key != "id" && key != "article" && key != "reference_summary" && key != "candidates" && warn) {
        warn("line " + std::to_string(line) + ": ignoring unknown key '" + key + "'");
      }
    }

    if (const auto [it, inserted] = id_lines.emplace(rec.id, line); !inserted) {
      throw CorpusError("duplicate id '" + rec.id + "' (first seen on line " +
                            std::to_string(it->second) + ")",
                        line);
    }
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, const WarningSink& warn) {
  if (format != CorpusFormat::jsonl) throw ConfigError("unsupported corpus format");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus file: " + path.string(), 0);
  return parse_jsonl(in, warn);
}

Corpus make_corpus(std::vector<CorpusRecord> records) {
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].id.empty()) throw CorpusError("record " + std::to_string(i) + " has empty id", 0);
    if (records[i].article.empty()) throw CorpusError("record '" + records[i].id + "' has empty article", 0);
    if (!ids.insert(records[i].id).second) throw CorpusError("duplicate id '" + records[i].id + "'", 0);
  }
  Corpus c;
  c.model_names = derive_model_names(records);
  c.records = std::move(records);
  return c;
}

Corpus filter_by_word_limit(const Corpus& corpus, std::size_t max_words) {
  if (max_words < 1) throw ValidationError("max_words must be at least 1");
  Corpus out;
  for (const auto& r : corpus.records) {
    if (textproc::word_count(r.article) <= max_words) out.records.push_back(r);
  }
  out.model_names = surviving_models(corpus, out.records);
  return out;
}

Corpus take_sample(const Corpus& corpus, std::size_t n) {
  if (n < 1) throw ValidationError("sample size must be at least 1");
  Corpus out;
  const auto count = std::min(n, corpus.records.size());
  out.records.assign(corpus.records.begin(), corpus.records.begin() + static_cast<std::ptrdiff_t>(count));
  out.model_names = surviving_models(corpus, out.records);
  return out;
}

}  // namespace summjudge::corpus
