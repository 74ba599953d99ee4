#pragma once

// Single-file index artifact: BM25 index plus the word-piece vocabulary built
// from the same corpus. Layout (little-endian):
//
//   magic "LXIX" | u32 version | index block | vocab block
//
// Reload is bit-exact: saving a loaded artifact reproduces the same bytes.

#include <fstream>
#include <stdexcept>
#include <string>

#include "lexlink/bm25.hpp"
#include "lexlink/serialize.hpp"
#include "lexlink/wordpiece.hpp"

namespace lexlink {

inline constexpr char kIndexMagic[5] = "LXIX";
inline constexpr std::uint32_t kIndexVersion = 1;

struct IndexArtifact {
  InvertedIndex index;
  WordPieceVocab vocab;

  static IndexArtifact build(const std::vector<EntityRecord>& entities,
                             double stopword_threshold = 0.20, Bm25Params params = {}) {
    IndexArtifact artifact;
    CorpusStats stats = build_corpus_stats(entities, stopword_threshold);
    artifact.index = InvertedIndex::build(entities, stats, params);

    std::vector<WordSequence> vocab_corpus;
    vocab_corpus.reserve(entities.size() * 2);
    for (const auto& e : entities) {
      vocab_corpus.push_back(tokenize_words(e.title));
      vocab_corpus.push_back(tokenize_words(e.description));
    }
    artifact.vocab = WordPieceVocab::build(vocab_corpus);
    return artifact;
  }
};

inline void save_index_file(const IndexArtifact& artifact, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open index file for writing: " + path);
  BinaryWriter w(out);
  w.magic(kIndexMagic);
  w.u32(kIndexVersion);
  artifact.index.save(w);
  artifact.vocab.save(w);
  if (!out.good()) throw std::runtime_error("failed writing index file: " + path);
}

inline IndexArtifact load_index_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open index file: " + path);
  BinaryReader r(in);
  r.expect_magic(kIndexMagic);
  const std::uint32_t version = r.u32();
  if (version != kIndexVersion)
    throw std::runtime_error(path + ": unsupported index version " + std::to_string(version));
  IndexArtifact artifact;
  artifact.index = InvertedIndex::load(r);
  artifact.vocab = WordPieceVocab::load(r);
  return artifact;
}

}  // namespace lexlink
