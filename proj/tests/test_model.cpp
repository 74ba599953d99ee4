#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "lexlink/model.hpp"
#include "lexlink/train.hpp"

using namespace lexlink;

namespace {

nn::ModelHyper tiny_hyper(int vocab, int d = 8, int layers = 1, int heads = 2) {
  nn::ModelHyper hyper;
  hyper.vocab_size = vocab;
  hyper.d_model = d;
  hyper.n_layers = layers;
  hyper.n_heads = heads;
  hyper.d_ff = 2 * d;
  hyper.max_len = 16;
  return hyper;
}

ExtractorInput fake_input(std::vector<int> ids) {
  ExtractorInput input;
  input.token_ids = std::move(ids);
  input.piece_to_word.assign(input.token_ids.size(), -1);
  for (std::size_t i = 1; i + 1 < input.token_ids.size(); ++i) {
    input.piece_to_word[i] = static_cast<int>(input.words.size());
    input.words.push_back("word" + std::to_string(i));
  }
  return input;
}

}  // namespace

TEST_CASE("zeroed head gives 0.5 everywhere") {
  auto model = TokenScoringModel::init(tiny_hyper(10), 5);
  model.params.head_w.setZero();
  model.params.head_b.setZero();
  auto scores = score_tokens(model, fake_input({0, 5, 6, 7, 1}));
  REQUIRE(scores.size() == 5);
  for (double s : scores) CHECK(s == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("score length matches input length and stays in (0,1)") {
  auto model = TokenScoringModel::init(tiny_hyper(12), 21);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len_dist(1, 12);
  std::uniform_int_distribution<int> id_dist(0, 11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> ids(static_cast<std::size_t>(len_dist(rng)));
    for (auto& id : ids) id = id_dist(rng);
    auto scores = score_tokens(model, fake_input(std::move(ids)));
    for (double s : scores) {
      CHECK(s > 0.0);
      CHECK(s < 1.0);
    }
  }
}

TEST_CASE("ids outside the vocabulary are rejected") {
  auto model = TokenScoringModel::init(tiny_hyper(10), 5);
  CHECK_THROWS(score_tokens(model, fake_input({0, 99, 1})));
  CHECK_THROWS(score_tokens(model, fake_input({0, -2, 1})));
}

TEST_CASE("bce loss analytic values") {
  SECTION("uniform 0.5 scores give ln 2 for any labels") {
    std::vector<double> scores(7, 0.5);
    CHECK(bce_loss(scores, {0, 1, 0, 1, 1, 0, 0}) ==
          Catch::Approx(std::log(2.0)).margin(1e-9));
  }
  SECTION("perfect predictions give (almost) zero") {
    std::vector<double> scores = {1.0, 0.0, 1.0};
    CHECK(bce_loss(scores, {1, 0, 1}) <= 1e-6);
  }
  SECTION("length mismatch is an error") {
    CHECK_THROWS(bce_loss({0.5}, {0, 1}));
  }
  SECTION("loss is bounded by -ln(eps)") {
    std::vector<double> scores = {1.0, 0.0};
    CHECK(bce_loss(scores, {0, 1}) <= -std::log(kBceEps) + 1e-9);
  }
  SECTION("random case agrees with direct summation") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.001, 0.999);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<double> scores(11);
      std::vector<std::uint8_t> labels(11);
      double direct = 0.0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = u(rng);
        labels[i] = (rng() & 1) != 0;
        direct += labels[i] ? std::log(scores[i]) : std::log(1.0 - scores[i]);
      }
      direct = -direct / static_cast<double>(scores.size());
      CHECK(std::abs(bce_loss(scores, labels) - direct) < 1e-10);
    }
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(31337);
  for (auto [d, layers, heads] : {std::tuple{8, 1, 2}, std::tuple{16, 2, 4}}) {
    auto hyper = tiny_hyper(14, d, layers, heads);
    auto model = TokenScoringModel::init(hyper, rng());

    auto input = fake_input({0, 5, 9, 13, 7, 6, 10, 2, 4, 8, 11, 1});
    std::vector<std::uint8_t> labels(input.token_ids.size());
    for (auto& l : labels) l = (rng() & 1) != 0;
    TrainExample example{input, labels};

    nn::ModelParams grads = zero_like(model.params);
    example_loss_and_grad(model, example, grads);

    auto loss_at = [&] { return bce_loss(score_tokens(model, input), labels); };
    const double h = 1e-4;
    auto p_entries = nn::tensor_entries(model.params);
    auto g_entries = nn::tensor_entries(grads);
    for (std::size_t t = 0; t < p_entries.size(); ++t) {
      nn::Mat& param = *p_entries[t].second;
      const nn::Mat& analytic = *g_entries[t].second;
      double err_sq = 0.0, norm_sq = 0.0;
      for (Eigen::Index i = 0; i < param.rows(); ++i)
        for (Eigen::Index j = 0; j < param.cols(); ++j) {
          const double original = param(i, j);
          param(i, j) = original + h;
          const double up = loss_at();
          param(i, j) = original - h;
          const double down = loss_at();
          param(i, j) = original;
          const double numeric = (up - down) / (2.0 * h);
          err_sq += (numeric - analytic(i, j)) * (numeric - analytic(i, j));
          norm_sq += numeric * numeric + analytic(i, j) * analytic(i, j);
        }
      const double rel = std::sqrt(err_sq) / std::max(1e-8, std::sqrt(norm_sq));
      INFO("tensor " << p_entries[t].first << " d=" << d);
      CHECK(rel < 1e-4);
    }
  }
}

TEST_CASE("extract_keywords ranks distinct words, max over pieces") {
  auto model = TokenScoringModel::init(tiny_hyper(20), 77);
  // two-piece words and a repeated word share the input
  ExtractorInput input;
  input.token_ids = {0, 2, 5, 6, 3, 7, 8, 7, 9, 1};
  input.piece_to_word = {-1, -1, 0, 0, -1, 1, 2, 3, 3, -1};
  input.words = {"alpha", "beta", "gamma", "beta"};

  auto scores = score_tokens(model, input);
  auto keywords = extract_keywords(model, input, 10, {});

  REQUIRE(keywords.size() == 3);  // alpha, beta, gamma deduplicated
  std::map<std::string, double> expected;
  expected["alpha"] = std::max(scores[2], scores[3]);
  expected["beta"] = std::max(scores[5], scores[7]);
  expected["gamma"] = scores[6];
  for (const auto& kw : keywords) CHECK(kw.score == Catch::Approx(expected.at(kw.word)));
  for (std::size_t i = 1; i < keywords.size(); ++i)
    CHECK(keywords[i - 1].score >= keywords[i].score);

  SECTION("k = 0 extracts nothing") {
    CHECK(extract_keywords(model, input, 0, {}).empty());
  }
  SECTION("k caps the result") {
    CHECK(extract_keywords(model, input, 2, {}).size() == 2);
  }
  SECTION("stopwords are excluded") {
    auto filtered = extract_keywords(model, input, 10, {"beta"});
    CHECK(filtered.size() == 2);
    for (const auto& kw : filtered) CHECK(kw.word != "beta");
  }
}

TEST_CASE("checkpoint round-trips bit-exact") {
  auto hyper = tiny_hyper(18, 16, 2, 4);
  ExtractorBundle bundle{TokenScoringModel::init(hyper, 2718),
                         WordPieceVocab::build({{"alpha", "beta", "gamma"}}),
                         {"the", "a"}};

  auto path = std::filesystem::temp_directory_path() / "lexlink_model.ckpt";
  save_checkpoint(bundle, path.string());
  ExtractorBundle reloaded = load_checkpoint(path.string());

  CHECK(reloaded.model.hyper == bundle.model.hyper);
  CHECK(reloaded.stopwords == bundle.stopwords);
  CHECK(reloaded.vocab == bundle.vocab);

  auto a = nn::tensor_entries(bundle.model.params);
  auto b = nn::tensor_entries(reloaded.model.params);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].second->rows() == b[i].second->rows());
    CHECK(*a[i].second == *b[i].second);  // bitwise equality
  }

  auto input = fake_input({0, 5, 9, 11, 1});
  CHECK(score_tokens(bundle.model, input) == score_tokens(reloaded.model, input));
}
