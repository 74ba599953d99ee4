#pragma once

// Distant supervision: weak token-level keyword labels from the overlap
// between a mention's context and its gold entity description.
//
// The preliminary set is the intersection of the stopword-filtered word sets
// of the full context (left + mention + right) and the description. It is
// ranked by the BM25 word/document score against the gold description
// (descending, ties lexicographic) and cut to the top k. Mentions with an
// empty overlap are kept as all-zero training examples.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexlink/bm25.hpp"
#include "lexlink/corpus.hpp"
#include "lexlink/extractor_input.hpp"

namespace lexlink {

struct ScoredKeyword {
  std::string word;
  double score = 0.0;

  bool operator==(const ScoredKeyword&) const = default;
};

struct KeywordLabelSet {
  std::string mention_id;
  std::vector<ScoredKeyword> keywords;  // final set K, descending score
  std::set<std::string> preliminary;    // K*
  std::size_t k_used = 0;

  std::set<std::string> keyword_words() const {
    std::set<std::string> out;
    for (const auto& kw : keywords) out.insert(kw.word);
    return out;
  }
};

struct TokenLabels {
  std::string mention_id;
  std::vector<std::uint8_t> labels;  // aligned to the extractor input
};

inline std::set<std::string> build_preliminary_keywords(const MentionRecord& mention,
                                                        const EntityRecord& entity,
                                                        const CorpusStats& stats) {
  std::set<std::string> context_words = word_set(mention.full_context(), stats);
  std::set<std::string> entity_words = word_set(entity.description, stats);
  std::set<std::string> overlap;
  std::set_intersection(context_words.begin(), context_words.end(), entity_words.begin(),
                        entity_words.end(), std::inserter(overlap, overlap.begin()));
  return overlap;
}

inline KeywordLabelSet rank_and_select(const std::set<std::string>& preliminary,
                                       const std::string& entity_id,
                                       const InvertedIndex& index, std::size_t k) {
  const std::int32_t ordinal = index.require_ordinal(entity_id);

  KeywordLabelSet out;
  out.k_used = k;
  std::vector<ScoredKeyword> ranked;
  ranked.reserve(preliminary.size());
  for (const auto& word : preliminary) {
    out.preliminary.insert(word);
    ranked.push_back(ScoredKeyword{word, index.word_score(word, ordinal)});
  }
  std::sort(ranked.begin(), ranked.end(), [](const ScoredKeyword& a, const ScoredKeyword& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.word < b.word;
  });
  if (ranked.size() > k) ranked.resize(k);
  out.keywords = std::move(ranked);
  return out;
}

// Labels every piece whose enclosing window word is in `keywords` (all
// occurrences); special-token positions stay 0.
inline std::vector<std::uint8_t> project_labels(const ExtractorInput& input,
                                                const std::set<std::string>& keywords) {
  std::vector<std::uint8_t> labels(input.token_ids.size(), 0);
  for (std::size_t i = 0; i < input.token_ids.size(); ++i) {
    const int word_idx = input.piece_to_word[i];
    if (word_idx < 0) continue;
    if (keywords.count(input.words[static_cast<std::size_t>(word_idx)])) labels[i] = 1;
  }
  return labels;
}

inline TokenLabels project_labels(const MentionRecord& mention,
                                  const KeywordLabelSet& keyword_set,
                                  const WordPieceVocab& vocab, const InputWindow& window = {}) {
  ExtractorInput input = build_extractor_input(mention, vocab, window);
  return TokenLabels{mention.mention_id, project_labels(input, keyword_set.keyword_words())};
}

// ---------------------------------------------------------------------------
// One distilled training example, self-contained for the trainer.

struct WeakLabelExample {
  std::string mention_id;
  std::string gold_entity_id;
  std::string mention_text;
  std::vector<ScoredKeyword> keywords;
  ExtractorInput input;
  std::vector<std::uint8_t> labels;
};

inline WeakLabelExample distill_example(const MentionRecord& mention,
                                        const EntityRecord& entity,
                                        const InvertedIndex& index,
                                        const WordPieceVocab& vocab, std::size_t k,
                                        const InputWindow& window = {}) {
  if (entity.entity_id != mention.gold_entity_id)
    throw std::invalid_argument("entity record does not match the mention's gold id");

  WeakLabelExample example;
  example.mention_id = mention.mention_id;
  example.gold_entity_id = mention.gold_entity_id;
  example.mention_text = mention.mention;

  auto preliminary = build_preliminary_keywords(mention, entity, index.stats());
  KeywordLabelSet selected = rank_and_select(preliminary, entity.entity_id, index, k);
  example.keywords = selected.keywords;
  example.input = build_extractor_input(mention, vocab, window);
  example.labels = project_labels(example.input, selected.keyword_words());
  return example;
}

// Label dump, JSON lines:
//   {"mention_id", "gold_entity_id", "mention",
//    "keywords": [{"word", "score"}, ...],
//    "token_ids": [...], "piece_to_word": [...], "words": [...],
//    "token_labels": [0/1, ...]}

inline nlohmann::json weak_label_to_json(const WeakLabelExample& example) {
  nlohmann::json j;
  j["mention_id"] = example.mention_id;
  j["gold_entity_id"] = example.gold_entity_id;
  j["mention"] = example.mention_text;
  auto keywords = nlohmann::json::array();
  for (const auto& kw : example.keywords)
    keywords.push_back({{"word", kw.word}, {"score", kw.score}});
  j["keywords"] = std::move(keywords);
  j["token_ids"] = example.input.token_ids;
  j["piece_to_word"] = example.input.piece_to_word;
  j["words"] = example.input.words;
  j["mention_word_begin"] = example.input.mention_word_begin;
  j["mention_word_end"] = example.input.mention_word_end;
  j["token_labels"] = example.labels;
  return j;
}

inline WeakLabelExample weak_label_from_json(const nlohmann::json& j) {
  WeakLabelExample example;
  example.mention_id = j.at("mention_id").get<std::string>();
  example.gold_entity_id = j.at("gold_entity_id").get<std::string>();
  example.mention_text = j.at("mention").get<std::string>();
  for (const auto& kw : j.at("keywords"))
    example.keywords.push_back(
        ScoredKeyword{kw.at("word").get<std::string>(), kw.at("score").get<double>()});
  example.input.token_ids = j.at("token_ids").get<std::vector<int>>();
  example.input.piece_to_word = j.at("piece_to_word").get<std::vector<int>>();
  example.input.words = j.at("words").get<std::vector<std::string>>();
  example.input.mention_word_begin = j.at("mention_word_begin").get<int>();
  example.input.mention_word_end = j.at("mention_word_end").get<int>();
  example.labels = j.at("token_labels").get<std::vector<std::uint8_t>>();
  if (example.labels.size() != example.input.token_ids.size())
    throw std::runtime_error("token_labels length does not match token_ids");
  return example;
}

inline void save_weak_labels(const std::vector<WeakLabelExample>& examples,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open label file for writing: " + path);
  for (const auto& example : examples) out << weak_label_to_json(example).dump() << "\n";
}

inline std::vector<WeakLabelExample> load_weak_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label file: " + path);
  std::vector<WeakLabelExample> examples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      examples.push_back(weak_label_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return examples;
}

}  // namespace lexlink
