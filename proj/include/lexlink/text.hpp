#pragma once

// Word tokenization. Both the query side and the index side must run the
// same rule, otherwise word overlap between contexts and descriptions is
// meaningless.
//
// Normalization table:
//   * a word is a maximal run of word characters;
//   * word characters are ASCII letters (lowercased), ASCII digits, and any
//     byte >= 0x80 (multi-byte UTF-8 sequences stay intact inside a word);
//   * every other byte separates words.

#include <cstddef>
#include <string>
#include <vector>

namespace lexlink {

using WordSequence = std::vector<std::string>;

inline bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

inline char normalize_byte(unsigned char c) {
  if (c >= 'A' && c <= 'Z') return static_cast<char>(c - 'A' + 'a');
  return static_cast<char>(c);
}

// A token plus its byte span in the source text, used for highlighting.
struct TokenSpan {
  std::string word;
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline std::vector<TokenSpan> tokenize_spans(const std::string& text) {
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    std::string word;
    while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) {
      word.push_back(normalize_byte(static_cast<unsigned char>(text[i])));
      ++i;
    }
    out.push_back(TokenSpan{std::move(word), begin, i});
  }
  return out;
}

inline WordSequence tokenize_words(const std::string& text) {
  WordSequence words;
  for (auto& span : tokenize_spans(text)) words.push_back(std::move(span.word));
  return words;
}

inline std::string join_words(const WordSequence& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

}  // namespace lexlink
