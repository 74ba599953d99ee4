#pragma once

// Token scoring model: encoder + sigmoid discriminator head, per-token
// keyword probabilities, BCE loss, and word-level top-k keyword extraction.
// The checkpoint bundles the tensors with the word-piece vocabulary and the
// stopword set so that extraction runs from a single file.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexlink/distant.hpp"
#include "lexlink/extractor_input.hpp"
#include "lexlink/nn/encoder.hpp"
#include "lexlink/nn/graph.hpp"
#include "lexlink/serialize.hpp"
#include "lexlink/wordpiece.hpp"

namespace lexlink {

struct TokenScoringModel {
  nn::ModelHyper hyper;
  nn::ModelParams params;

  static TokenScoringModel init(const nn::ModelHyper& hyper, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return TokenScoringModel{hyper, nn::init_params(hyper, rng)};
  }
};

inline double stable_sigmoid(double z) {
  double s;
  if (z >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    s = e / (1.0 + e);
  }
  // keep scores strictly inside (0, 1) even at saturation
  return std::clamp(s, 1e-15, 1.0 - 1e-15);
}

inline std::vector<double> score_tokens(const TokenScoringModel& model,
                                        const ExtractorInput& input) {
  nn::Graph graph;
  nn::ParamNodes nodes = nn::register_params(graph, model.params);
  const int logits = nn::forward_logits(graph, nodes, model.hyper, input.token_ids);
  const nn::Mat& z = graph.value(logits);
  std::vector<double> scores(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    scores[static_cast<std::size_t>(i)] = stable_sigmoid(z(i, 0));
  return scores;
}

inline constexpr double kBceEps = 1e-7;

// Mean over all positions, special tokens included.
inline double bce_loss(const std::vector<double>& scores,
                       const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("scores/labels length mismatch");
  if (scores.empty()) throw std::invalid_argument("empty score sequence");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = std::clamp(scores[i], kBceEps, 1.0 - kBceEps);
    total += labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return -total / static_cast<double>(scores.size());
}

// ---------------------------------------------------------------------------
// Word-level top-k extraction: a word scores the maximum over its pieces
// (every occurrence); distinct words are ranked by score, ties by earliest
// piece position. Special tokens and stopwords are never returned.

struct ExtractedKeyword {
  std::string word;
  double score = 0.0;
};

inline std::vector<ExtractedKeyword> extract_keywords(const TokenScoringModel& model,
                                                      const ExtractorInput& input,
                                                      std::size_t k,
                                                      const std::set<std::string>& stopwords) {
  if (k == 0) return {};
  const std::vector<double> scores = score_tokens(model, input);

  struct Candidate {
    double score = -1.0;
    std::size_t first_pos = 0;
  };
  std::map<std::string, Candidate> best;
  for (std::size_t i = 0; i < input.token_ids.size(); ++i) {
    const int word_idx = input.piece_to_word[i];
    if (word_idx < 0) continue;
    const std::string& word = input.words[static_cast<std::size_t>(word_idx)];
    if (stopwords.count(word)) continue;
    auto [it, inserted] = best.try_emplace(word, Candidate{scores[i], i});
    if (!inserted && scores[i] > it->second.score) it->second.score = scores[i];
  }

  std::vector<std::pair<std::string, Candidate>> ranked(best.begin(), best.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.score != b.second.score) return a.second.score > b.second.score;
    return a.second.first_pos < b.second.first_pos;
  });
  if (ranked.size() > k) ranked.resize(k);

  std::vector<ExtractedKeyword> out;
  out.reserve(ranked.size());
  for (auto& [word, cand] : ranked) out.push_back(ExtractedKeyword{word, cand.score});
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint: magic "LXCP" | u32 version | hyper | vocab | stopwords |
// named tensors in traversal order. Raw IEEE-754 payload, bit-exact reload.

inline constexpr char kCheckpointMagic[5] = "LXCP";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct ExtractorBundle {
  TokenScoringModel model;
  WordPieceVocab vocab;
  std::set<std::string> stopwords;
};

inline void save_checkpoint(const ExtractorBundle& bundle, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  BinaryWriter w(out);
  w.magic(kCheckpointMagic);
  w.u32(kCheckpointVersion);

  const auto& h = bundle.model.hyper;
  w.u32(static_cast<std::uint32_t>(h.vocab_size));
  w.u32(static_cast<std::uint32_t>(h.d_model));
  w.u32(static_cast<std::uint32_t>(h.n_layers));
  w.u32(static_cast<std::uint32_t>(h.n_heads));
  w.u32(static_cast<std::uint32_t>(h.d_ff));
  w.u32(static_cast<std::uint32_t>(h.max_len));

  bundle.vocab.save(w);
  w.u64(bundle.stopwords.size());
  for (const auto& word : bundle.stopwords) w.str(word);

  auto entries = nn::tensor_entries(const_cast<nn::ModelParams&>(bundle.model.params));
  w.u64(entries.size());
  for (const auto& [name, mat] : entries) {
    w.str(name);
    w.u64(static_cast<std::uint64_t>(mat->rows()));
    w.u64(static_cast<std::uint64_t>(mat->cols()));
    for (Eigen::Index r = 0; r < mat->rows(); ++r)
      for (Eigen::Index c = 0; c < mat->cols(); ++c) w.f64((*mat)(r, c));
  }
  if (!out.good()) throw std::runtime_error("failed writing checkpoint: " + path);
}

inline ExtractorBundle load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  BinaryReader r(in);
  r.expect_magic(kCheckpointMagic);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(version));

  ExtractorBundle bundle;
  auto& h = bundle.model.hyper;
  h.vocab_size = static_cast<int>(r.u32());
  h.d_model = static_cast<int>(r.u32());
  h.n_layers = static_cast<int>(r.u32());
  h.n_heads = static_cast<int>(r.u32());
  h.d_ff = static_cast<int>(r.u32());
  h.max_len = static_cast<int>(r.u32());
  h.validate();

  bundle.vocab = WordPieceVocab::load(r);
  const std::uint64_t n_stopwords = r.u64();
  for (std::uint64_t i = 0; i < n_stopwords; ++i) bundle.stopwords.insert(r.str());

  bundle.model.params.layers.resize(static_cast<std::size_t>(h.n_layers));
  auto entries = nn::tensor_entries(bundle.model.params);
  const std::uint64_t n_tensors = r.u64();
  if (n_tensors != entries.size())
    throw std::runtime_error(path + ": tensor count mismatch");
  for (auto& [name, mat] : entries) {
    const std::string stored = r.str();
    if (stored != name)
      throw std::runtime_error(path + ": unexpected tensor '" + stored + "', wanted '" +
                               name + "'");
    const auto rows = static_cast<Eigen::Index>(r.u64());
    const auto cols = static_cast<Eigen::Index>(r.u64());
    mat->resize(rows, cols);
    for (Eigen::Index row = 0; row < rows; ++row)
      for (Eigen::Index col = 0; col < cols; ++col) (*mat)(row, col) = r.f64();
  }
  return bundle;
}

}  // namespace lexlink
