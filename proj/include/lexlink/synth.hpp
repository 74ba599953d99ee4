#pragma once

// Deterministic synthetic corpora for benchmarks, demos and the acceptance
// suite.
//
// The vocabulary-mismatch corpus models the hard case for surface-form
// retrieval: mention strings share no words with the gold description, but
// the surrounding context carries entity-specific signature words (always
// right after the mention) among filler words and distractor topics from
// other entities. The sentinel task is a pure sequence-labeling problem:
// the word following the sentinel token is the keyword.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexlink/corpus.hpp"
#include "lexlink/distant.hpp"
#include "lexlink/train.hpp"
#include "lexlink/wordpiece.hpp"

namespace lexlink::synth {

inline std::string letters(int i) {
  std::string out;
  do {
    out.push_back(static_cast<char>('a' + i % 26));
    i /= 26;
  } while (i > 0);
  std::reverse(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary-mismatch corpus.

struct MismatchCorpusSpec {
  int n_entities = 300;
  int n_train = 50;
  int n_dev = 50;
  int n_test = 200;
  int sigs_per_entity = 3;
  int topics_per_entity = 3;   // drawn from a pool shared by ~5 entities each
  int distractor_topics = 10;  // topic noise per mention context
  std::uint64_t seed = 7;
};

struct SyntheticCorpus {
  std::vector<EntityRecord> entities;
  std::vector<MentionRecord> train;
  std::vector<MentionRecord> dev;
  std::vector<MentionRecord> test;
};

inline SyntheticCorpus make_mismatch_corpus(const MismatchCorpusSpec& spec = {}) {
  if (spec.n_entities < 2) throw std::invalid_argument("need at least two entities");
  std::mt19937_64 rng(spec.seed);

  // Fillers appear in every description, so the 20% DF rule removes them.
  const std::vector<std::string> fillers = {"kora", "mesa", "tilo", "vana", "rudo"};
  // Mention surfaces never appear in any description.
  const std::vector<std::string> surfaces = {"veq", "zun", "pyx",  "qor", "wib",
                                             "juf", "nax", "gorp", "myl", "tev"};

  auto sig = [&](int entity, int j) {
    return "sig" + letters(entity) + std::string(1, static_cast<char>('a' + j));
  };
  const int topic_pool = std::max(2, spec.n_entities / 5);
  std::vector<std::string> topics;
  for (int p = 0; p < topic_pool; ++p) topics.push_back("top" + letters(p));
  std::uniform_int_distribution<std::size_t> pick_topic(0, topics.size() - 1);

  SyntheticCorpus corpus;
  for (int i = 0; i < spec.n_entities; ++i) {
    EntityRecord entity;
    entity.entity_id = "E" + std::to_string(i);
    entity.title = "outpost " + letters(i);
    std::string desc = fillers[0] + " " + fillers[1] + " " + fillers[2];
    for (int j = 0; j < spec.sigs_per_entity; ++j) desc += " " + sig(i, j);
    desc += " " + fillers[3];
    for (int j = 0; j < spec.topics_per_entity; ++j) desc += " " + topics[pick_topic(rng)];
    desc += " " + fillers[4];
    entity.description = desc;
    corpus.entities.push_back(std::move(entity));
  }

  auto make_mentions = [&](const std::string& tag, int count) {
    std::vector<MentionRecord> mentions;
    std::uniform_int_distribution<int> pick_entity(0, spec.n_entities - 1);
    std::uniform_int_distribution<std::size_t> pick_surface(0, surfaces.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_filler(0, fillers.size() - 1);
    for (int i = 0; i < count; ++i) {
      const int gold = pick_entity(rng);
      MentionRecord m;
      m.mention_id = "m-" + tag + "-" + std::to_string(i);
      m.gold_entity_id = "E" + std::to_string(gold);
      m.mention = surfaces[pick_surface(rng)] + " " + surfaces[pick_surface(rng)];

      // Left: fillers and shared-pool topic noise, then the cue word.
      std::string left;
      for (int d = 0; d < spec.distractor_topics; ++d) {
        left += fillers[pick_filler(rng)] + " ";
        left += topics[pick_topic(rng)] + " ";
      }
      left += "near";
      m.left_context = left;

      // Right: the gold signature words come first, then more noise.
      std::string right;
      for (int j = 0; j < spec.sigs_per_entity; ++j) {
        if (j) right += " ";
        right += sig(gold, j);
      }
      right += " " + fillers[pick_filler(rng)];
      for (int d = 0; d < 2; ++d) right += " " + topics[pick_topic(rng)];
      m.right_context = right;
      mentions.push_back(std::move(m));
    }
    return mentions;
  };

  corpus.train = make_mentions("train", spec.n_train);
  corpus.dev = make_mentions("dev", spec.n_dev);
  corpus.test = make_mentions("test", spec.n_test);
  return corpus;
}

// ---------------------------------------------------------------------------
// Sentinel sequence-labeling task.

struct SentinelTaskSpec {
  int n_train = 800;
  int n_test = 60;
  int words_per_sequence = 12;
  int keywords_per_sequence = 2;
  int pool_size = 40;
  std::uint64_t seed = 11;
};

struct SentinelDataset {
  WordPieceVocab vocab;
  std::vector<TrainExample> train;
  std::vector<TrainExample> test;
  std::string sentinel = "zq";
};

inline SentinelDataset make_sentinel_dataset(const SentinelTaskSpec& spec = {}) {
  if (spec.keywords_per_sequence >= spec.words_per_sequence)
    throw std::invalid_argument("more keywords than words");
  std::mt19937_64 rng(spec.seed);

  std::vector<std::string> pool;
  for (int i = 0; i < spec.pool_size; ++i) pool.push_back("w" + letters(i));

  SentinelDataset dataset;
  WordSequence vocab_words = pool;
  vocab_words.push_back(dataset.sentinel);
  vocab_words.push_back("obj");
  dataset.vocab = WordPieceVocab::build({vocab_words});

  auto make_examples = [&](int count) {
    std::vector<TrainExample> out;
    for (int i = 0; i < count; ++i) {
      std::vector<std::string> words = pool;
      std::shuffle(words.begin(), words.end(), rng);
      words.resize(static_cast<std::size_t>(spec.words_per_sequence));

      std::vector<std::size_t> positions(words.size());
      std::iota(positions.begin(), positions.end(), 0);
      std::shuffle(positions.begin(), positions.end(), rng);
      positions.resize(static_cast<std::size_t>(spec.keywords_per_sequence));
      std::sort(positions.begin(), positions.end());

      std::set<std::string> keywords;
      std::string text;
      for (std::size_t p = 0; p < words.size(); ++p) {
        const bool is_keyword =
            std::find(positions.begin(), positions.end(), p) != positions.end();
        if (!text.empty()) text += " ";
        if (is_keyword) {
          text += dataset.sentinel + " " + words[p];
          keywords.insert(words[p]);
        } else {
          text += words[p];
        }
      }

      ExtractorInput input = build_extractor_input("", "obj", text, dataset.vocab);
      std::vector<std::uint8_t> labels = project_labels(input, keywords);
      out.push_back(TrainExample{std::move(input), std::move(labels)});
    }
    return out;
  };

  dataset.train = make_examples(spec.n_train);
  dataset.test = make_examples(spec.n_test);
  return dataset;
}

// ---------------------------------------------------------------------------
// JSONL writers so generated corpora can feed the command-line tools.

inline void save_entities_jsonl(const std::vector<EntityRecord>& entities,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& e : entities) {
    nlohmann::json j{{"document_id", e.entity_id}, {"title", e.title}, {"text", e.description}};
    out << j.dump() << "\n";
  }
}

inline void save_mentions_jsonl(const std::vector<MentionRecord>& mentions,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& m : mentions) {
    nlohmann::json j{{"mention_id", m.mention_id},
                     {"text", m.mention},
                     {"left_context", m.left_context},
                     {"right_context", m.right_context},
                     {"label_document_id", m.gold_entity_id}};
    out << j.dump() << "\n";
  }
}

}  // namespace lexlink::synth
