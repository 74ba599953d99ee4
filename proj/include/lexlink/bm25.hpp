#pragma once

// Inverted index over entity descriptions with Okapi BM25 scoring.
//
//   s(w, E) = IDF(w) * f(w,E) * (k1 + 1) / (f(w,E) + k1 * (1 - b + b*|E|/avgdl))
//   IDF(w)  = ln(1 + (N - df(w) + 0.5) / (df(w) + 0.5))
//
// |E| and avgdl count words before stopword removal; postings exclude
// stopwords. Queries have set semantics: each distinct word contributes once.
// Query words are accumulated in lexicographic order so that scores are
// bitwise reproducible, including across a save/load round trip.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexlink/corpus.hpp"
#include "lexlink/serialize.hpp"
#include "lexlink/text.hpp"

namespace lexlink {

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

struct Posting {
  std::int32_t doc = 0;  // entity ordinal
  std::int32_t freq = 0;

  bool operator==(const Posting&) const = default;
};

struct ScoredEntity {
  std::string entity_id;
  double score = 0.0;
};

using RetrievalResult = std::vector<ScoredEntity>;

class InvertedIndex {
 public:
  InvertedIndex() = default;

  // `stats` must come from the same entity list.
  static InvertedIndex build(const std::vector<EntityRecord>& entities,
                             const CorpusStats& stats, Bm25Params params = {}) {
    if (params.k1 <= 0.0) throw std::invalid_argument("k1 must be positive");
    if (params.b < 0.0 || params.b > 1.0) throw std::invalid_argument("b must be in [0, 1]");
    if (stats.doc_count != static_cast<std::int64_t>(entities.size()))
      throw std::invalid_argument("corpus stats do not match the entity list");

    InvertedIndex index;
    index.stats_ = stats;
    index.params_ = params;
    index.doc_lengths_.reserve(entities.size());

    std::map<std::string, std::vector<Posting>> postings;  // sorted words
    for (std::size_t ord = 0; ord < entities.size(); ++ord) {
      const auto& entity = entities[ord];
      if (index.ordinal_of_.count(entity.entity_id))
        throw std::invalid_argument("duplicate entity id '" + entity.entity_id + "'");
      index.ordinal_of_[entity.entity_id] = static_cast<std::int32_t>(ord);
      index.entity_ids_.push_back(entity.entity_id);

      WordSequence words = tokenize_words(entity.description);
      index.doc_lengths_.push_back(static_cast<std::int32_t>(words.size()));

      std::map<std::string, std::int32_t> freqs;
      for (const auto& w : words)
        if (!stats.is_stopword(w)) ++freqs[w];
      for (const auto& [word, freq] : freqs)
        postings[word].push_back(Posting{static_cast<std::int32_t>(ord), freq});
    }

    index.words_.reserve(postings.size());
    for (auto& [word, plist] : postings) {
      index.word_slot_[word] = static_cast<std::int32_t>(index.words_.size());
      index.words_.push_back(word);
      index.postings_.push_back(std::move(plist));
    }
    index.build_doc_terms();
    return index;
  }

  std::size_t doc_count() const { return entity_ids_.size(); }
  const CorpusStats& stats() const { return stats_; }
  const Bm25Params& params() const { return params_; }

  const std::string& entity_id(std::int32_t ordinal) const {
    return entity_ids_.at(static_cast<std::size_t>(ordinal));
  }

  std::optional<std::int32_t> ordinal(const std::string& entity_id) const {
    auto it = ordinal_of_.find(entity_id);
    if (it == ordinal_of_.end()) return std::nullopt;
    return it->second;
  }

  std::int32_t require_ordinal(const std::string& entity_id) const {
    auto ord = ordinal(entity_id);
    if (!ord) throw std::invalid_argument("unknown entity id '" + entity_id + "'");
    return *ord;
  }

  std::int32_t doc_length(std::int32_t ordinal) const {
    return doc_lengths_.at(static_cast<std::size_t>(ordinal));
  }

  double idf(const std::string& word) const {
    const double n = static_cast<double>(stats_.doc_count);
    const double df = static_cast<double>(stats_.df(word));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
  }

  // Term frequency of `word` in the description of `ordinal`; 0 when absent
  // or when `word` is a stopword (stopwords carry no postings).
  std::int32_t term_freq(const std::string& word, std::int32_t ordinal) const {
    auto slot = word_slot_.find(word);
    if (slot == word_slot_.end()) return 0;
    const auto& plist = postings_[static_cast<std::size_t>(slot->second)];
    auto it = std::lower_bound(plist.begin(), plist.end(), ordinal,
                               [](const Posting& p, std::int32_t d) { return p.doc < d; });
    if (it == plist.end() || it->doc != ordinal) return 0;
    return it->freq;
  }

  double word_score(const std::string& word, std::int32_t ordinal) const {
    if (ordinal < 0 || static_cast<std::size_t>(ordinal) >= doc_count())
      throw std::invalid_argument("entity ordinal out of range");
    if (stats_.is_stopword(word)) return 0.0;
    const std::int32_t freq = term_freq(word, ordinal);
    if (freq == 0) return 0.0;
    return score_term(idf(word), freq, doc_lengths_[static_cast<std::size_t>(ordinal)]);
  }

  double word_score(const std::string& word, const std::string& entity_id) const {
    return word_score(word, require_ordinal(entity_id));
  }

  // Top-n entities for a set-valued query. Scores are sums of word_score over
  // distinct query words; zero-score documents are never returned; ties break
  // by ascending entity ordinal.
  RetrievalResult retrieve(const std::set<std::string>& query, std::size_t n) const {
    if (n < 1) throw std::invalid_argument("n must be >= 1");

    std::vector<double> scores(doc_count(), 0.0);
    std::vector<std::int32_t> touched;
    for (const auto& word : query) {  // std::set iterates in sorted order
      auto slot = word_slot_.find(word);
      if (slot == word_slot_.end() || stats_.is_stopword(word)) continue;
      const double word_idf = idf(word);
      for (const Posting& p : postings_[static_cast<std::size_t>(slot->second)]) {
        if (scores[static_cast<std::size_t>(p.doc)] == 0.0) touched.push_back(p.doc);
        scores[static_cast<std::size_t>(p.doc)] +=
            score_term(word_idf, p.freq, doc_lengths_[static_cast<std::size_t>(p.doc)]);
      }
    }

    std::sort(touched.begin(), touched.end(), [&scores](std::int32_t a, std::int32_t b) {
      const double sa = scores[static_cast<std::size_t>(a)];
      const double sb = scores[static_cast<std::size_t>(b)];
      if (sa != sb) return sa > sb;
      return a < b;
    });
    if (touched.size() > n) touched.resize(n);

    RetrievalResult result;
    result.reserve(touched.size());
    for (std::int32_t ord : touched)
      result.push_back(ScoredEntity{entity_ids_[static_cast<std::size_t>(ord)],
                                    scores[static_cast<std::size_t>(ord)]});
    return result;
  }

  RetrievalResult retrieve(const WordSequence& query_words, std::size_t n) const {
    return retrieve(std::set<std::string>(query_words.begin(), query_words.end()), n);
  }

  // Indexed (non-stopword) terms of one description, sorted by word.
  const std::vector<std::pair<std::string, std::int32_t>>& doc_terms(std::int32_t ordinal) const {
    return doc_terms_.at(static_cast<std::size_t>(ordinal));
  }

  void save(BinaryWriter& w) const {
    w.f64(params_.k1);
    w.f64(params_.b);
    w.u64(static_cast<std::uint64_t>(stats_.doc_count));
    w.f64(stats_.avgdl);
    w.f64(stats_.stopword_threshold);
    w.u64(stats_.doc_freq.size());
    for (const auto& [word, df] : stats_.doc_freq) {
      w.str(word);
      w.u64(static_cast<std::uint64_t>(df));
    }
    w.u64(entity_ids_.size());
    for (std::size_t i = 0; i < entity_ids_.size(); ++i) {
      w.str(entity_ids_[i]);
      w.u64(static_cast<std::uint64_t>(doc_lengths_[i]));
    }
    w.u64(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) {
      w.str(words_[i]);
      w.u64(postings_[i].size());
      for (const Posting& p : postings_[i]) {
        w.u64(static_cast<std::uint64_t>(p.doc));
        w.u64(static_cast<std::uint64_t>(p.freq));
      }
    }
  }

  static InvertedIndex load(BinaryReader& r) {
    InvertedIndex index;
    index.params_.k1 = r.f64();
    index.params_.b = r.f64();
    index.stats_.doc_count = static_cast<std::int64_t>(r.u64());
    index.stats_.avgdl = r.f64();
    index.stats_.stopword_threshold = r.f64();
    const std::uint64_t n_words_df = r.u64();
    for (std::uint64_t i = 0; i < n_words_df; ++i) {
      std::string word = r.str();
      index.stats_.doc_freq[word] = static_cast<std::int64_t>(r.u64());
    }
    // The stopword set is a pure function of (doc_freq, threshold, doc_count).
    const double cutoff =
        index.stats_.stopword_threshold * static_cast<double>(index.stats_.doc_count);
    for (const auto& [word, df] : index.stats_.doc_freq)
      if (static_cast<double>(df) > cutoff) index.stats_.stopwords.insert(word);

    const std::uint64_t n_docs = r.u64();
    for (std::uint64_t i = 0; i < n_docs; ++i) {
      std::string id = r.str();
      index.ordinal_of_[id] = static_cast<std::int32_t>(i);
      index.entity_ids_.push_back(std::move(id));
      index.doc_lengths_.push_back(static_cast<std::int32_t>(r.u64()));
    }
    const std::uint64_t n_words = r.u64();
    for (std::uint64_t i = 0; i < n_words; ++i) {
      std::string word = r.str();
      index.word_slot_[word] = static_cast<std::int32_t>(index.words_.size());
      index.words_.push_back(std::move(word));
      std::vector<Posting> plist(r.u64());
      for (auto& p : plist) {
        p.doc = static_cast<std::int32_t>(r.u64());
        p.freq = static_cast<std::int32_t>(r.u64());
      }
      index.postings_.push_back(std::move(plist));
    }
    index.build_doc_terms();
    return index;
  }

 private:
  double score_term(double word_idf, std::int32_t freq, std::int32_t doc_len) const {
    const double f = static_cast<double>(freq);
    const double len_ratio =
        stats_.avgdl > 0.0 ? static_cast<double>(doc_len) / stats_.avgdl : 0.0;
    return word_idf * f * (params_.k1 + 1.0) /
           (f + params_.k1 * (1.0 - params_.b + params_.b * len_ratio));
  }

  void build_doc_terms() {
    doc_terms_.assign(doc_count(), {});
    for (std::size_t slot = 0; slot < words_.size(); ++slot)
      for (const Posting& p : postings_[slot])
        doc_terms_[static_cast<std::size_t>(p.doc)].emplace_back(words_[slot], p.freq);
  }

  CorpusStats stats_;
  Bm25Params params_;
  std::vector<std::string> entity_ids_;                  // ordinal -> id
  std::unordered_map<std::string, std::int32_t> ordinal_of_;
  std::vector<std::int32_t> doc_lengths_;                // pre-filter word counts
  std::vector<std::string> words_;                       // slot -> word (sorted)
  std::unordered_map<std::string, std::int32_t> word_slot_;
  std::vector<std::vector<Posting>> postings_;           // slot -> postings by doc
  std::vector<std::vector<std::pair<std::string, std::int32_t>>> doc_terms_;
};

}  // namespace lexlink
