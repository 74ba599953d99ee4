#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "lexlink/distant.hpp"
#include "support/bm25_oracle.hpp"
#include "support/random_corpus.hpp"

using namespace lexlink;

namespace {

struct Fixture {
  std::vector<EntityRecord> entities;
  CorpusStats stats;
  InvertedIndex index;
  WordPieceVocab vocab;

  explicit Fixture(std::vector<EntityRecord> ents, double threshold = 0.20)
      : entities(std::move(ents)),
        stats(build_corpus_stats(entities, threshold)),
        index(InvertedIndex::build(entities, stats)) {
    std::vector<WordSequence> corpus;
    for (const auto& e : entities) corpus.push_back(tokenize_words(e.description));
    vocab = WordPieceVocab::build(corpus);
  }
};

MentionRecord mention_of(const std::string& left, const std::string& m,
                         const std::string& right, const std::string& gold) {
  return MentionRecord{"m0", m, left, right, gold};
}

}  // namespace

TEST_CASE("preliminary keywords are the filtered context/description overlap") {
  Fixture fx({{"E0", "t", "domino coffee is a restaurant in domino city"},
              {"E1", "t", "is a cat"},
              {"E2", "t", "is a dog"},
              {"E3", "t", "is a bird"},
              {"E4", "t", "is a fish"}});
  REQUIRE(fx.stats.is_stopword("is"));
  REQUIRE(fx.stats.is_stopword("a"));

  auto mention = mention_of("we met at", "domino station", "today", "E0");
  auto overlap = build_preliminary_keywords(mention, fx.entities[0], fx.stats);
  CHECK(overlap == std::set<std::string>{"domino"});

  SECTION("disjoint vocabularies give an empty set") {
    auto far = mention_of("met at", "the aquarium", "today", "E0");
    CHECK(build_preliminary_keywords(far, fx.entities[0], fx.stats).empty());
  }
  SECTION("context equal to the description gives all filtered words") {
    auto same = mention_of("", fx.entities[1].description, "", "E1");
    CHECK(build_preliminary_keywords(same, fx.entities[1], fx.stats) ==
          std::set<std::string>{"cat"});
  }
}

TEST_CASE("rank_and_select orders by the BM25 word score") {
  Fixture fx({{"E0", "t", "domino domino coffee shop"},
              {"E1", "t", "coffee house"},
              {"E2", "t", "tea house"}},
             0.95);
  // within E0: f(domino)=2 beats f(coffee)=1 (same |E|); df(domino)=1 < df(coffee)=2
  auto selected =
      rank_and_select({"coffee", "domino", "shop"}, "E0", fx.index, 2);
  REQUIRE(selected.keywords.size() == 2);
  CHECK(selected.keywords[0].word == "domino");
  CHECK(selected.preliminary.size() == 3);
  CHECK(selected.k_used == 2);

  SECTION("k = 0 selects nothing") {
    CHECK(rank_and_select({"coffee"}, "E0", fx.index, 0).keywords.empty());
  }
  SECTION("k >= |preliminary| keeps everything, sorted") {
    auto all = rank_and_select({"coffee", "domino", "shop"}, "E0", fx.index, 10);
    CHECK(all.keywords.size() == 3);
    for (std::size_t i = 1; i < all.keywords.size(); ++i)
      CHECK(all.keywords[i - 1].score >= all.keywords[i].score);
  }
  SECTION("score ties break lexicographically") {
    // two words with identical df and f in the same document tie exactly
    Fixture tie({{"E0", "t", "beta alpha"}, {"E1", "t", "other words"}}, 0.95);
    auto picked = rank_and_select({"beta", "alpha"}, "E0", tie.index, 2);
    REQUIRE(picked.keywords.size() == 2);
    CHECK(picked.keywords[0].word == "alpha");
    CHECK(picked.keywords[0].score == picked.keywords[1].score);
  }
}

TEST_CASE("distilled keywords match an independent recomputation") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 40; ++trial) {
    auto corpus = testsupport::make_random_corpus(rng, 12, 25, 20);
    oracle::Corpus reference{corpus.docs, 0.20, 1.5, 0.75};
    Fixture fx(corpus.entities);

    std::uniform_int_distribution<std::size_t> pick_doc(0, corpus.docs.size() - 1);
    const std::size_t gold = pick_doc(rng);

    // random context built partly from the gold document's words
    std::string context;
    std::uniform_int_distribution<std::size_t> pick_word(0, 24);
    for (int i = 0; i < 12; ++i) context += "w" + std::to_string(pick_word(rng)) + " ";
    auto mention = mention_of(context, "q", "", fx.entities[gold].entity_id);

    const std::size_t k = 4;
    auto prelim = build_preliminary_keywords(mention, fx.entities[gold], fx.stats);
    auto selected = rank_and_select(prelim, fx.entities[gold].entity_id, fx.index, k);

    // K is a subset of words(M) intersect words(E)
    std::set<std::string> context_words;
    for (auto& w : tokenize_words(mention.full_context()))
      if (!oracle::is_stopword(reference, w)) context_words.insert(w);
    for (const auto& kw : selected.keywords) {
      CHECK(context_words.count(kw.word) == 1);
      CHECK(std::find(corpus.docs[gold].begin(), corpus.docs[gold].end(), kw.word) !=
            corpus.docs[gold].end());
    }
    CHECK(selected.keywords.size() <= k);
    if (prelim.size() >= k) CHECK(selected.keywords.size() == k);

    // ordering agrees with the oracle's word scores
    for (std::size_t i = 0; i < selected.keywords.size(); ++i) {
      const double expected = oracle::word_score(reference, selected.keywords[i].word, gold);
      CHECK(std::abs(selected.keywords[i].score - expected) < 1e-9);
      if (i > 0) {
        const double prev = selected.keywords[i - 1].score;
        CHECK((prev > selected.keywords[i].score ||
               (prev == selected.keywords[i].score &&
                selected.keywords[i - 1].word < selected.keywords[i].word)));
      }
    }
  }
}

TEST_CASE("label projection marks every occurrence of keyword words") {
  Fixture fx({{"E0", "t", "domino coffee"}, {"E1", "t", "other"}}, 0.95);
  auto mention = mention_of("domino rules this", "game", "domino wins", "E0");
  auto input = build_extractor_input(mention, fx.vocab);
  auto labels = project_labels(input, {"domino"});

  REQUIRE(labels.size() == input.token_ids.size());
  int marked_words = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int w = input.piece_to_word[i];
    if (w < 0) {
      CHECK(labels[i] == 0);  // specials stay 0
    } else if (input.words[static_cast<std::size_t>(w)] == "domino") {
      CHECK(labels[i] == 1);
      ++marked_words;
    } else {
      CHECK(labels[i] == 0);
    }
  }
  CHECK(marked_words == 2);  // both occurrences

  SECTION("empty keyword set gives all-zero labels") {
    auto zeros = project_labels(input, {});
    for (auto v : zeros) CHECK(v == 0);
  }
}

TEST_CASE("keywords truncated out of the window contribute no labels") {
  Fixture fx({{"E0", "t", "domino coffee"}, {"E1", "t", "other"}}, 0.95);
  std::string left = "domino";
  for (int i = 0; i < 50; ++i) left += " coffee";
  auto mention = mention_of(left, "game", "", "E0");
  // window too small to keep the leading "domino"
  auto input = build_extractor_input(mention, fx.vocab, InputWindow{24, 10, 10});
  auto labels = project_labels(input, {"domino"});
  for (auto v : labels) CHECK(v == 0);
}

TEST_CASE("labels and keywords are consistent and deterministic") {
  Fixture fx({{"E0", "t", "domino coffee shop city"}, {"E1", "t", "other"}}, 0.95);
  auto mention = mention_of("met at domino", "coffee shop", "in the city", "E0");

  auto a = distill_example(mention, fx.entities[0], fx.index, fx.vocab, 3);
  auto b = distill_example(mention, fx.entities[0], fx.index, fx.vocab, 3);
  CHECK(a.keywords == b.keywords);
  CHECK(a.labels == b.labels);
  CHECK(a.input.token_ids == b.input.token_ids);

  // a position is labeled 1 iff its word is in K
  std::set<std::string> keyword_words;
  for (auto& kw : a.keywords) keyword_words.insert(kw.word);
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const int w = a.input.piece_to_word[i];
    const bool in_k =
        w >= 0 && keyword_words.count(a.input.words[static_cast<std::size_t>(w)]) > 0;
    CHECK(static_cast<bool>(a.labels[i]) == in_k);
  }
}

TEST_CASE("weak label dump round-trips through JSONL") {
  Fixture fx({{"E0", "t", "domino coffee shop"}, {"E1", "t", "other"}}, 0.95);
  auto mention = mention_of("met at domino", "coffee", "", "E0");
  auto example = distill_example(mention, fx.entities[0], fx.index, fx.vocab, 4);

  auto path = std::filesystem::temp_directory_path() / "lexlink_labels.jsonl";
  save_weak_labels({example}, path.string());
  auto reloaded = load_weak_labels(path.string());

  REQUIRE(reloaded.size() == 1);
  CHECK(reloaded[0].mention_id == example.mention_id);
  CHECK(reloaded[0].gold_entity_id == example.gold_entity_id);
  CHECK(reloaded[0].keywords == example.keywords);
  CHECK(reloaded[0].input.token_ids == example.input.token_ids);
  CHECK(reloaded[0].input.piece_to_word == example.input.piece_to_word);
  CHECK(reloaded[0].input.words == example.input.words);
  CHECK(reloaded[0].labels == example.labels);
}

TEST_CASE("empty overlap keeps the mention as an all-zero example") {
  Fixture fx({{"E0", "t", "unrelated words entirely"}, {"E1", "t", "other"}}, 0.95);
  auto mention = mention_of("nothing shared here", "blue fox", "", "E0");
  auto example = distill_example(mention, fx.entities[0], fx.index, fx.vocab, 4);
  CHECK(example.keywords.empty());
  for (auto v : example.labels) CHECK(v == 0);
}
