// lexlink command-line tool: build indexes, distill weak keyword labels,
// train and run the keyword extractor, retrieve, evaluate and explain.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lexlink/distant.hpp"
#include "lexlink/index_file.hpp"
#include "lexlink/model.hpp"
#include "lexlink/pipeline.hpp"
#include "lexlink/synth.hpp"
#include "lexlink/train.hpp"

namespace {

using namespace lexlink;

struct WindowOpts {
  int max_len = 128;
  int left_len = 64;
  int right_len = 64;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--max-len", max_len, "input length budget in word pieces");
    cmd->add_option("--left-len", left_len, "left context budget in word pieces");
    cmd->add_option("--right-len", right_len, "right context budget in word pieces");
  }

  InputWindow window() const { return InputWindow{max_len, left_len, right_len}; }
};

int cmd_index(const std::string& entities_path, const std::string& out_path, double k1,
              double b, double threshold) {
  auto entities = load_entities(entities_path);
  IndexArtifact artifact = IndexArtifact::build(entities, threshold, Bm25Params{k1, b});
  save_index_file(artifact, out_path);
  std::cout << "indexed " << artifact.index.doc_count() << " entities ("
            << artifact.index.stats().stopwords.size() << " stopwords, avgdl "
            << artifact.index.stats().avgdl << ", vocab " << artifact.vocab.size()
            << " pieces) -> " << out_path << "\n";
  return 0;
}

int cmd_distill(const std::string& index_path, const std::string& entities_path,
                const std::string& mentions_path, const std::string& out_path, std::size_t k,
                const WindowOpts& win, bool lenient) {
  IndexArtifact artifact = load_index_file(index_path);
  auto [entities, mentions] = load_corpus(entities_path, mentions_path, !lenient);

  std::map<std::string, const EntityRecord*> by_id;
  for (const auto& e : entities) by_id[e.entity_id] = &e;

  std::vector<WeakLabelExample> examples;
  std::size_t empty_overlap = 0;
  for (const auto& mention : mentions) {
    auto it = by_id.find(mention.gold_entity_id);
    if (it == by_id.end()) continue;  // lenient mode: reported by the loader
    WeakLabelExample example = distill_example(mention, *it->second, artifact.index,
                                               artifact.vocab, k, win.window());
    if (example.keywords.empty()) ++empty_overlap;
    examples.push_back(std::move(example));
  }
  save_weak_labels(examples, out_path);
  std::cout << "distilled " << examples.size() << " examples (" << empty_overlap
            << " with empty overlap) -> " << out_path << "\n";
  return 0;
}

int cmd_train(const std::string& labels_path, const std::string& dev_path,
              const std::string& index_path, const std::string& out_path,
              const TrainConfig& cfg, nn::ModelHyper hyper, std::size_t n,
              const std::string& dev_metric_kind, const WindowOpts& win) {
  IndexArtifact artifact = load_index_file(index_path);
  auto train_labels = load_weak_labels(labels_path);
  auto dev_labels = load_weak_labels(dev_path);
  if (train_labels.empty()) throw std::runtime_error("no training examples in " + labels_path);

  std::vector<TrainExample> train_examples;
  for (auto& e : train_labels) train_examples.push_back(TrainExample{e.input, e.labels});

  hyper.vocab_size = static_cast<int>(artifact.vocab.size());
  hyper.max_len = win.max_len;
  TokenScoringModel model = TokenScoringModel::init(hyper, cfg.seed);

  // Dev metric: Recall@n over the dev mentions by default (the index is the
  // attached corpus), or plain dev loss with --dev-metric loss.
  DevMetric dev;
  if (dev_metric_kind == "loss") {
    std::vector<TrainExample> dev_examples;
    for (auto& e : dev_labels) dev_examples.push_back(TrainExample{e.input, e.labels});
    dev = dev_loss_metric(std::move(dev_examples));
  } else {
    dev.name = "dev_recall@" + std::to_string(n);
    dev.higher_is_better = true;
    dev.evaluate = [&artifact, &dev_labels, k = cfg.k, n](const TokenScoringModel& m) {
      std::size_t hits = 0;
      for (const auto& example : dev_labels) {
        std::set<std::string> query;
        for (const auto& w : tokenize_words(example.mention_text))
          if (!artifact.index.stats().is_stopword(w)) query.insert(w);
        for (const auto& kw :
             extract_keywords(m, example.input, k, artifact.index.stats().stopwords))
          query.insert(kw.word);
        for (const auto& scored : artifact.index.retrieve(query, n))
          if (scored.entity_id == example.gold_entity_id) {
            ++hits;
            break;
          }
      }
      return 100.0 * static_cast<double>(hits) / static_cast<double>(dev_labels.size());
    };
  }

  TrainLog log = train(model, train_examples, cfg, &dev);
  for (const auto& epoch : log.epochs)
    std::cout << "epoch " << epoch.epoch << "  train_loss " << epoch.train_loss << "  "
              << log.dev_metric_name << " " << epoch.dev_metric
              << (epoch.is_best ? "  (best)" : "") << "\n";
  std::cout << "kept checkpoint from epoch " << log.best_epoch << "\n";

  save_checkpoint(
      ExtractorBundle{std::move(model), artifact.vocab, artifact.index.stats().stopwords},
      out_path);
  std::cout << "saved checkpoint -> " << out_path << "\n";
  return 0;
}

int cmd_extract(const std::string& ckpt_path, const std::string& mentions_path, std::size_t k,
                const std::string& out_path, WindowOpts win) {
  ExtractorBundle bundle = load_checkpoint(ckpt_path);
  auto mentions = load_mentions(mentions_path);
  win.max_len = std::min(win.max_len, bundle.model.hyper.max_len);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty() && out_path != "-") {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
    out = &file;
  }
  for (const auto& mention : mentions) {
    ExtractorInput input = build_extractor_input(mention, bundle.vocab, win.window());
    auto keywords = extract_keywords(bundle.model, input, k, bundle.stopwords);
    nlohmann::json j;
    j["mention_id"] = mention.mention_id;
    auto arr = nlohmann::json::array();
    for (const auto& kw : keywords) arr.push_back({{"word", kw.word}, {"score", kw.score}});
    j["keywords"] = std::move(arr);
    (*out) << j.dump() << "\n";
  }
  return 0;
}

int cmd_retrieve(const std::string& index_path, const std::string& query, std::size_t n) {
  IndexArtifact artifact = load_index_file(index_path);
  std::set<std::string> words;
  for (const auto& w : tokenize_words(query))
    if (!artifact.index.stats().is_stopword(w)) words.insert(w);
  RetrievalResult result = artifact.index.retrieve(words, n);
  std::cout << "query:";
  for (const auto& w : words) std::cout << " " << w;
  std::cout << "\n";
  for (std::size_t i = 0; i < result.size(); ++i)
    std::cout << (i + 1) << "\t" << result[i].entity_id << "\t" << result[i].score << "\n";
  if (result.empty()) std::cout << "(no matches)\n";
  return 0;
}

int cmd_eval(const std::string& index_path, const std::string& mentions_path,
             const std::string& mode_name, const std::string& ckpt_path, std::size_t k,
             std::size_t n, std::string domain, const std::string& out_path,
             const WindowOpts& win) {
  IndexArtifact artifact = load_index_file(index_path);
  auto mentions = load_mentions(mentions_path);
  const QueryMode mode = parse_query_mode(mode_name);

  std::optional<ExtractorBundle> bundle;
  if (mode == QueryMode::kKeywords || mode == QueryMode::kKeywordsOnly) {
    if (ckpt_path.empty())
      throw std::runtime_error("mode '" + mode_name + "' requires --ckpt");
    bundle = load_checkpoint(ckpt_path);
  }
  if (domain.empty()) {
    domain = std::filesystem::path(mentions_path).stem().string();
    if (domain.empty()) domain = mentions_path;
  }

  QueryBuilder builder = [&](const MentionRecord& m) {
    return build_query(m, bundle ? &*bundle : nullptr, mode, k, artifact.index.stats(),
                       win.window());
  };
  EvalReport report = aggregate_report(
      {evaluate_domain(domain, mentions, artifact.index, builder, n)}, n);
  print_report(std::cout, report);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    nlohmann::json j = report_to_json(report);
    j["mode"] = mode_name;
    out << j.dump(2) << "\n";
    std::cout << "report -> " << out_path << "\n";
  }
  return 0;
}

int cmd_explain(const std::string& index_path, const std::string& ckpt_path,
                const std::string& entities_path, const std::string& mentions_path,
                const std::string& mention_id, std::size_t k, const WindowOpts& win) {
  IndexArtifact artifact = load_index_file(index_path);
  ExtractorBundle bundle = load_checkpoint(ckpt_path);
  auto [entities, mentions] = load_corpus(entities_path, mentions_path, true);

  const MentionRecord* mention = nullptr;
  if (mention_id.empty()) {
    mention = &mentions.front();
  } else {
    for (const auto& m : mentions)
      if (m.mention_id == mention_id) mention = &m;
    if (!mention) throw std::runtime_error("mention '" + mention_id + "' not found");
  }
  const EntityRecord* entity = nullptr;
  for (const auto& e : entities)
    if (e.entity_id == mention->gold_entity_id) entity = &e;
  if (!entity) throw std::runtime_error("gold entity not found for " + mention->mention_id);

  ExplainReport report =
      explain(*mention, bundle, artifact.index, *entity, k, win.window());
  print_explain(std::cout, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"keyword-enhanced sparse retrieval for few-shot entity linking"};
  app.require_subcommand(1);

  // index
  auto* index_cmd = app.add_subcommand("index", "build a BM25 index from an entities file");
  std::string entities_path, out_path;
  double k1 = 1.5, b = 0.75, threshold = 0.20;
  index_cmd->add_option("--entities", entities_path, "entities JSONL")->required();
  index_cmd->add_option("--out", out_path, "output index file")->required();
  index_cmd->add_option("--k1", k1, "BM25 k1");
  index_cmd->add_option("--b", b, "BM25 b");
  index_cmd->add_option("--stopword-threshold", threshold,
                        "document-frequency fraction above which a word is dropped");

  // distill
  auto* distill_cmd =
      app.add_subcommand("distill", "generate weak keyword labels from gold entities");
  std::string d_index, d_entities, d_mentions, d_out;
  std::size_t d_k = 32;
  bool d_lenient = false;
  WindowOpts d_win;
  distill_cmd->add_option("--index", d_index, "index file")->required();
  distill_cmd->add_option("--entities", d_entities, "entities JSONL")->required();
  distill_cmd->add_option("--mentions", d_mentions, "mentions JSONL")->required();
  distill_cmd->add_option("--out", d_out, "output labels JSONL")->required();
  distill_cmd->add_option("--k", d_k, "keywords kept per mention");
  distill_cmd->add_flag("--lenient", d_lenient, "warn instead of failing on dangling gold ids");
  d_win.add_to(distill_cmd);

  // train
  auto* train_cmd = app.add_subcommand("train", "train the keyword extractor");
  std::string t_labels, t_dev, t_index, t_out, t_dev_metric = "recall";
  TrainConfig t_cfg;
  nn::ModelHyper t_hyper;
  std::size_t t_n = 64;
  WindowOpts t_win;
  train_cmd->add_option("--labels", t_labels, "training labels JSONL")->required();
  train_cmd->add_option("--dev", t_dev, "development labels JSONL")->required();
  train_cmd->add_option("--index", t_index, "index file (vocabulary + dev retrieval)")
      ->required();
  train_cmd->add_option("--out", t_out, "output checkpoint")->required();
  train_cmd->add_option("--lr", t_cfg.learning_rate, "learning rate");
  train_cmd->add_option("--weight-decay", t_cfg.weight_decay, "decoupled weight decay");
  train_cmd->add_option("--batch-size", t_cfg.batch_size, "mini-batch size");
  train_cmd->add_option("--epochs", t_cfg.epochs, "training epochs");
  train_cmd->add_option("--seed", t_cfg.seed, "random seed");
  train_cmd->add_option("--k", t_cfg.k, "keywords per mention for the dev metric");
  train_cmd->add_option("--n", t_n, "dev Recall@n cutoff");
  train_cmd->add_option("--dev-metric", t_dev_metric, "recall | loss")
      ->check(CLI::IsMember({"recall", "loss"}));
  train_cmd->add_option("--d-model", t_hyper.d_model, "encoder width");
  train_cmd->add_option("--layers", t_hyper.n_layers, "encoder layers");
  train_cmd->add_option("--heads", t_hyper.n_heads, "attention heads");
  train_cmd->add_option("--d-ff", t_hyper.d_ff, "feed-forward width");
  t_win.add_to(train_cmd);

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "extract keywords for mentions");
  std::string e_ckpt, e_mentions, e_out = "-";
  std::size_t e_k = 32;
  WindowOpts e_win;
  extract_cmd->add_option("--ckpt", e_ckpt, "model checkpoint")->required();
  extract_cmd->add_option("--mentions", e_mentions, "mentions JSONL")->required();
  extract_cmd->add_option("--k", e_k, "keywords per mention");
  extract_cmd->add_option("--out", e_out, "output path or - for stdout");
  e_win.add_to(extract_cmd);

  // retrieve
  auto* retrieve_cmd = app.add_subcommand("retrieve", "run one BM25 query");
  std::string r_index, r_query;
  std::size_t r_n = 64;
  retrieve_cmd->add_option("--index", r_index, "index file")->required();
  retrieve_cmd->add_option("--query", r_query, "free-text query")->required();
  retrieve_cmd->add_option("--n", r_n, "results to return");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Recall@n over a mentions file");
  std::string v_index, v_mentions, v_mode = "keywords", v_ckpt, v_domain, v_out;
  std::size_t v_k = 32, v_n = 64;
  WindowOpts v_win;
  eval_cmd->add_option("--index", v_index, "index file")->required();
  eval_cmd->add_option("--mentions", v_mentions, "mentions JSONL")->required();
  eval_cmd->add_option("--mode", v_mode,
                       "mention-only | full-context | keywords | keywords-only");
  eval_cmd->add_option("--ckpt", v_ckpt, "model checkpoint (keyword modes)");
  eval_cmd->add_option("--k", v_k, "keywords per mention");
  eval_cmd->add_option("--n", v_n, "recall cutoff");
  eval_cmd->add_option("--domain", v_domain, "domain name for the report");
  eval_cmd->add_option("--out", v_out, "write the JSON report here");
  v_win.add_to(eval_cmd);

  // explain
  auto* explain_cmd =
      app.add_subcommand("explain", "show extracted keywords against the gold description");
  std::string x_index, x_ckpt, x_entities, x_mentions, x_mention_id;
  std::size_t x_k = 32;
  WindowOpts x_win;
  explain_cmd->add_option("--index", x_index, "index file")->required();
  explain_cmd->add_option("--ckpt", x_ckpt, "model checkpoint")->required();
  explain_cmd->add_option("--entities", x_entities, "entities JSONL")->required();
  explain_cmd->add_option("--mentions", x_mentions, "mentions JSONL")->required();
  explain_cmd->add_option("--mention-id", x_mention_id, "mention to explain (default: first)");
  explain_cmd->add_option("--k", x_k, "keywords per mention");
  x_win.add_to(explain_cmd);

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "run a declarative multi-domain experiment");
  std::string exp_config;
  exp_cmd->add_option("--config", exp_config, "experiment config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (index_cmd->parsed()) return cmd_index(entities_path, out_path, k1, b, threshold);
    if (distill_cmd->parsed())
      return cmd_distill(d_index, d_entities, d_mentions, d_out, d_k, d_win, d_lenient);
    if (train_cmd->parsed())
      return cmd_train(t_labels, t_dev, t_index, t_out, t_cfg, t_hyper, t_n, t_dev_metric,
                       t_win);
    if (extract_cmd->parsed()) return cmd_extract(e_ckpt, e_mentions, e_k, e_out, e_win);
    if (retrieve_cmd->parsed()) return cmd_retrieve(r_index, r_query, r_n);
    if (eval_cmd->parsed())
      return cmd_eval(v_index, v_mentions, v_mode, v_ckpt, v_k, v_n, v_domain, v_out, v_win);
    if (explain_cmd->parsed())
      return cmd_explain(x_index, x_ckpt, x_entities, x_mentions, x_mention_id, x_k, x_win);
    if (exp_cmd->parsed()) {
      run_experiment(exp_config, std::cout);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
