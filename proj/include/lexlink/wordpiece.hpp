#pragma once

// Word-piece vocabulary with greedy longest-match segmentation.
//
// The vocabulary is built deterministically from a tokenized corpus: every
// single byte seen in any word becomes a fallback piece, and whole words are
// added by descending frequency (ties broken lexicographically) up to
// max_words. Greedy longest-match then gives whole-word pieces for known
// words and prefix+byte decompositions for unseen ones. Bytes never seen at
// build time map to [UNK].

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexlink/serialize.hpp"
#include "lexlink/text.hpp"

namespace lexlink {

class WordPieceVocab {
 public:
  static constexpr int kCls = 0;
  static constexpr int kSep = 1;
  static constexpr int kStart = 2;
  static constexpr int kEnd = 3;
  static constexpr int kUnk = 4;
  static constexpr int kNumSpecials = 5;

  WordPieceVocab() = default;

  static WordPieceVocab build(const std::vector<WordSequence>& corpus,
                              std::size_t max_words = 200000) {
    std::unordered_map<std::string, std::int64_t> counts;
    std::map<std::string, bool> bytes;  // ordered for deterministic ids
    for (const auto& seq : corpus) {
      for (const auto& word : seq) {
        ++counts[word];
        for (char c : word) bytes[std::string(1, c)] = true;
      }
    }

    std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });

    WordPieceVocab vocab;
    for (const auto& [byte, _] : bytes) vocab.add_piece(byte);
    std::size_t added = 0;
    for (const auto& [word, _] : ranked) {
      if (added >= max_words) break;
      if (vocab.add_piece(word)) ++added;
    }
    return vocab;
  }

  std::size_t size() const { return pieces_.size() + kNumSpecials; }

  const std::string& piece(int id) const {
    static const std::string specials[kNumSpecials] = {"[CLS]", "[SEP]", "[START]",
                                                       "[END]", "[UNK]"};
    if (id < 0 || static_cast<std::size_t>(id) >= size())
      throw std::out_of_range("piece id out of range");
    if (id < kNumSpecials) return specials[id];
    return pieces_[static_cast<std::size_t>(id - kNumSpecials)];
  }

  // -1 when the piece is not in the vocabulary.
  int piece_id(const std::string& piece) const {
    for (int s = 0; s < kNumSpecials; ++s)
      if (this->piece(s) == piece) return s;
    auto it = id_of_.find(piece);
    return it == id_of_.end() ? -1 : it->second;
  }

  // Greedy longest-match decomposition; always returns at least one id.
  std::vector<int> encode_word(const std::string& word) const {
    std::vector<int> ids;
    if (word.empty()) return ids;
    std::size_t pos = 0;
    while (pos < word.size()) {
      std::size_t len = std::min(word.size() - pos, max_piece_len_);
      int match = -1;
      for (; len >= 1; --len) {
        auto it = id_of_.find(word.substr(pos, len));
        if (it != id_of_.end()) {
          match = it->second;
          break;
        }
      }
      if (match < 0) {
        ids.push_back(kUnk);
        pos += 1;
      } else {
        ids.push_back(match);
        pos += len;
      }
    }
    return ids;
  }

  void save(BinaryWriter& w) const {
    w.u64(pieces_.size());
    for (const auto& p : pieces_) w.str(p);
  }

  static WordPieceVocab load(BinaryReader& r) {
    WordPieceVocab vocab;
    std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) vocab.add_piece(r.str());
    return vocab;
  }

  bool operator==(const WordPieceVocab& other) const { return pieces_ == other.pieces_; }

 private:
  bool add_piece(const std::string& piece) {
    if (id_of_.count(piece)) return false;
    int id = static_cast<int>(pieces_.size()) + kNumSpecials;
    pieces_.push_back(piece);
    id_of_[piece] = id;
    max_piece_len_ = std::max(max_piece_len_, piece.size());
    return true;
  }

  std::vector<std::string> pieces_;  // id - kNumSpecials -> piece
  std::unordered_map<std::string, int> id_of_;
  std::size_t max_piece_len_ = 1;
};

}  // namespace lexlink
