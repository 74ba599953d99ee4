#pragma once

// Entity / mention corpora: JSON-lines ingestion, document-frequency
// statistics and the high-DF stopword rule.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "lexlink/text.hpp"

namespace lexlink {

struct EntityRecord {
  std::string entity_id;
  std::string title;
  std::string description;  // the retrieval document; may be empty
};

struct MentionRecord {
  std::string mention_id;
  std::string mention;  // surface string, non-empty
  std::string left_context;
  std::string right_context;
  std::string gold_entity_id;

  // Full context in reading order: left + mention + right.
  std::string full_context() const {
    return left_context + " " + mention + " " + right_context;
  }
};

// Corpus-wide word statistics over entity descriptions.
//
// doc_freq counts the number of descriptions a word occurs in (presence,
// not occurrences). avgdl and per-document lengths are measured before
// stopword removal so that a single length definition backs both the
// statistics and the index.
struct CorpusStats {
  std::int64_t doc_count = 0;
  double avgdl = 0.0;
  double stopword_threshold = 0.0;
  std::map<std::string, std::int64_t> doc_freq;
  std::set<std::string> stopwords;

  bool is_stopword(const std::string& w) const { return stopwords.count(w) > 0; }

  std::int64_t df(const std::string& w) const {
    auto it = doc_freq.find(w);
    return it == doc_freq.end() ? 0 : it->second;
  }
};

inline CorpusStats build_corpus_stats(const std::vector<EntityRecord>& entities,
                                      double threshold = 0.20) {
  if (entities.empty()) throw std::invalid_argument("empty corpus");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("stopword threshold must be in (0, 1)");

  CorpusStats stats;
  stats.doc_count = static_cast<std::int64_t>(entities.size());
  stats.stopword_threshold = threshold;

  std::int64_t total_words = 0;
  for (const auto& entity : entities) {
    WordSequence words = tokenize_words(entity.description);
    total_words += static_cast<std::int64_t>(words.size());
    std::unordered_set<std::string> seen(words.begin(), words.end());
    for (const auto& w : seen) ++stats.doc_freq[w];
  }
  stats.avgdl = static_cast<double>(total_words) / static_cast<double>(stats.doc_count);

  // Strict inequality: a word at exactly the threshold is retained.
  const double cutoff = threshold * static_cast<double>(stats.doc_count);
  for (const auto& [word, df] : stats.doc_freq)
    if (static_cast<double>(df) > cutoff) stats.stopwords.insert(word);
  return stats;
}

inline WordSequence filter_stopwords(const WordSequence& seq, const CorpusStats& stats) {
  WordSequence out;
  out.reserve(seq.size());
  for (const auto& w : seq)
    if (!stats.is_stopword(w)) out.push_back(w);
  return out;
}

// Stopword-filtered set of words in a text.
inline std::set<std::string> word_set(const std::string& text, const CorpusStats& stats) {
  std::set<std::string> out;
  for (auto& w : tokenize_words(text))
    if (!stats.is_stopword(w)) out.insert(std::move(w));
  return out;
}

// ---------------------------------------------------------------------------
// JSON-lines ingestion.
//
// Entities:  {"document_id": str, "title": str, "text": str}
// Mentions:  {"mention_id": str, "text": str, "left_context": str,
//             "right_context": str, "label_document_id": str}

namespace detail {

inline nlohmann::json parse_line(const std::string& path, std::size_t line_no,
                                 const std::string& line) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + " line " + std::to_string(line_no) +
                             ": malformed JSON (" + e.what() + ")");
  }
}

inline std::string require_string(const nlohmann::json& j, const char* key,
                                  const std::string& path, std::size_t line_no) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw std::runtime_error(path + " line " + std::to_string(line_no) +
                             ": missing string field '" + key + "'");
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline std::vector<EntityRecord> load_entities(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open entities file: " + path);

  std::vector<EntityRecord> entities;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto j = detail::parse_line(path, line_no, line);
    EntityRecord rec;
    rec.entity_id = detail::require_string(j, "document_id", path, line_no);
    rec.title = detail::require_string(j, "title", path, line_no);
    rec.description = detail::require_string(j, "text", path, line_no);
    if (!ids.insert(rec.entity_id).second)
      throw std::runtime_error(path + " line " + std::to_string(line_no) +
                               ": duplicate entity id '" + rec.entity_id + "'");
    entities.push_back(std::move(rec));
  }
  return entities;
}

inline std::vector<MentionRecord> load_mentions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mentions file: " + path);

  std::vector<MentionRecord> mentions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto j = detail::parse_line(path, line_no, line);
    MentionRecord rec;
    rec.mention_id = detail::require_string(j, "mention_id", path, line_no);
    rec.mention = detail::require_string(j, "text", path, line_no);
    rec.left_context = detail::require_string(j, "left_context", path, line_no);
    rec.right_context = detail::require_string(j, "right_context", path, line_no);
    rec.gold_entity_id = detail::require_string(j, "label_document_id", path, line_no);
    if (rec.mention.empty())
      throw std::runtime_error(path + " line " + std::to_string(line_no) +
                               ": empty mention text");
    mentions.push_back(std::move(rec));
  }
  return mentions;
}

// Loads both corpora and validates gold links. In strict mode a mention whose
// gold_entity_id does not resolve is an error; otherwise it is reported to
// `warnings` (or stderr) and kept.
inline std::pair<std::vector<EntityRecord>, std::vector<MentionRecord>> load_corpus(
    const std::string& entities_path, const std::string& mentions_path,
    bool strict = true, std::ostream* warnings = nullptr) {
  auto entities = load_entities(entities_path);
  auto mentions = load_mentions(mentions_path);

  std::unordered_set<std::string> ids;
  for (const auto& e : entities) ids.insert(e.entity_id);

  for (const auto& m : mentions) {
    if (ids.count(m.gold_entity_id)) continue;
    std::string msg = "mention '" + m.mention_id + "' references unknown entity '" +
                      m.gold_entity_id + "'";
    if (strict) throw std::runtime_error(mentions_path + ": " + msg);
    (warnings ? *warnings : std::cerr) << "warning: " << msg << "\n";
  }
  return {std::move(entities), std::move(mentions)};
}

// ---------------------------------------------------------------------------
// Split manifest: per-domain corpus paths.
//
// {"domains": [{"name": str, "entities": str,
//               "train": str, "dev": str, "test": str}, ...]}

struct DomainPaths {
  std::string name;
  std::string entities;
  std::string train;
  std::string dev;
  std::string test;
};

inline std::vector<DomainPaths> load_split_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open split manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": malformed JSON (" + e.what() + ")");
  }
  if (!j.contains("domains") || !j.at("domains").is_array())
    throw std::runtime_error(path + ": expected a 'domains' array");

  std::vector<DomainPaths> out;
  for (const auto& d : j.at("domains")) {
    DomainPaths p;
    p.name = d.at("name").get<std::string>();
    p.entities = d.at("entities").get<std::string>();
    p.train = d.at("train").get<std::string>();
    p.dev = d.at("dev").get<std::string>();
    p.test = d.at("test").get<std::string>();
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace lexlink
