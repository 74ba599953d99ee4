#pragma once

// Builds the token-classification input
//
//   [CLS] M_l [START] m [END] M_r [SEP]
//
// at the word-piece level. Mention pieces are never truncated. The left
// context keeps its rightmost pieces (up to left_len), the right context its
// leftmost (up to right_len). When both sides together still exceed the
// total budget max_len - 4 - |mention pieces|, the budget is split evenly:
// a side that fits within half keeps everything and donates the slack to the
// other side; otherwise left gets the odd spare piece.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexlink/corpus.hpp"
#include "lexlink/text.hpp"
#include "lexlink/wordpiece.hpp"

namespace lexlink {

struct ExtractorInput {
  std::vector<int> token_ids;
  // piece position -> index into `words`; -1 for [CLS]/[START]/[END]/[SEP].
  std::vector<int> piece_to_word;
  // Window words in order: kept left words, mention words, kept right words.
  std::vector<std::string> words;
  int mention_word_begin = 0;  // [begin, end) range of mention words in `words`
  int mention_word_end = 0;

  std::size_t length() const { return token_ids.size(); }
};

struct InputWindow {
  int max_len = 128;
  int left_len = 64;
  int right_len = 64;
};

namespace detail {

struct PieceRun {
  std::vector<int> ids;       // flattened pieces
  std::vector<int> word_idx;  // parallel: local word index per piece
  int word_count = 0;
};

inline PieceRun encode_segment(const WordSequence& words, const WordPieceVocab& vocab) {
  PieceRun run;
  for (const auto& word : words) {
    std::vector<int> ids = vocab.encode_word(word);
    for (int id : ids) {
      run.ids.push_back(id);
      run.word_idx.push_back(run.word_count);
    }
    ++run.word_count;
  }
  return run;
}

}  // namespace detail

inline ExtractorInput build_extractor_input(const std::string& left_text,
                                            const std::string& mention_text,
                                            const std::string& right_text,
                                            const WordPieceVocab& vocab,
                                            const InputWindow& window = {}) {
  if (window.max_len < 4) throw std::invalid_argument("max_len must be at least 4");
  if (window.left_len < 0 || window.right_len < 0)
    throw std::invalid_argument("context lengths must be non-negative");

  const WordSequence left_words = tokenize_words(left_text);
  const WordSequence mention_words = tokenize_words(mention_text);
  const WordSequence right_words = tokenize_words(right_text);

  detail::PieceRun left = detail::encode_segment(left_words, vocab);
  detail::PieceRun mention = detail::encode_segment(mention_words, vocab);
  detail::PieceRun right = detail::encode_segment(right_words, vocab);

  const int budget = window.max_len - 4 - static_cast<int>(mention.ids.size());
  if (budget < 0) throw std::invalid_argument("mention too long for max_len");

  int left_keep = std::min<int>(static_cast<int>(left.ids.size()), window.left_len);
  int right_keep = std::min<int>(static_cast<int>(right.ids.size()), window.right_len);
  if (left_keep + right_keep > budget) {
    const int half = budget / 2;
    if (left_keep <= half) {
      right_keep = budget - left_keep;
    } else if (right_keep <= half) {
      left_keep = budget - right_keep;
    } else {
      left_keep = budget - half;  // left takes the spare piece on odd budgets
      right_keep = half;
    }
  }

  const int left_drop = static_cast<int>(left.ids.size()) - left_keep;

  ExtractorInput input;
  input.token_ids.reserve(static_cast<std::size_t>(4 + left_keep + right_keep) +
                          mention.ids.size());

  auto append_special = [&input](int id) {
    input.token_ids.push_back(id);
    input.piece_to_word.push_back(-1);
  };

  // Window words get fresh contiguous indices; a word survives if at least
  // one of its pieces is kept (the boundary word may be kept partially).
  std::vector<int> remap;
  auto map_word = [&](const WordSequence& source, int local_idx) {
    int key = local_idx;
    if (key >= static_cast<int>(remap.size())) remap.resize(static_cast<std::size_t>(key) + 1, -1);
    if (remap[static_cast<std::size_t>(key)] < 0) {
      remap[static_cast<std::size_t>(key)] = static_cast<int>(input.words.size());
      input.words.push_back(source[static_cast<std::size_t>(local_idx)]);
    }
    return remap[static_cast<std::size_t>(key)];
  };

  append_special(WordPieceVocab::kCls);
  for (int i = left_drop; i < static_cast<int>(left.ids.size()); ++i) {
    input.token_ids.push_back(left.ids[static_cast<std::size_t>(i)]);
    input.piece_to_word.push_back(map_word(left_words, left.word_idx[static_cast<std::size_t>(i)]));
  }

  remap.clear();
  append_special(WordPieceVocab::kStart);
  input.mention_word_begin = static_cast<int>(input.words.size());
  for (std::size_t i = 0; i < mention.ids.size(); ++i) {
    input.token_ids.push_back(mention.ids[i]);
    input.piece_to_word.push_back(map_word(mention_words, mention.word_idx[i]));
  }
  input.mention_word_end = static_cast<int>(input.words.size());
  append_special(WordPieceVocab::kEnd);

  remap.clear();
  for (int i = 0; i < right_keep; ++i) {
    input.token_ids.push_back(right.ids[static_cast<std::size_t>(i)]);
    input.piece_to_word.push_back(
        map_word(right_words, right.word_idx[static_cast<std::size_t>(i)]));
  }
  append_special(WordPieceVocab::kSep);

  return input;
}

inline ExtractorInput build_extractor_input(const MentionRecord& mention,
                                            const WordPieceVocab& vocab,
                                            const InputWindow& window = {}) {
  return build_extractor_input(mention.left_context, mention.mention, mention.right_context,
                               vocab, window);
}

}  // namespace lexlink
