#pragma once

// End-to-end orchestration: query construction, Recall@n evaluation with
// macro/micro aggregation, the explain report, and the experiment runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexlink/corpus.hpp"
#include "lexlink/distant.hpp"
#include "lexlink/index_file.hpp"
#include "lexlink/model.hpp"
#include "lexlink/train.hpp"

namespace lexlink {

// ---------------------------------------------------------------------------
// Query construction.

enum class QueryMode {
  kMentionOnly,   // Q = words(m)
  kFullContext,   // Q = all filtered context words within the word window
  kKeywords,      // Q = words(m) union extracted keywords
  kKeywordsOnly,  // Q = extracted keywords
};

inline const char* to_string(QueryMode mode) {
  switch (mode) {
    case QueryMode::kMentionOnly: return "mention-only";
    case QueryMode::kFullContext: return "full-context";
    case QueryMode::kKeywords: return "keywords";
    case QueryMode::kKeywordsOnly: return "keywords-only";
  }
  return "?";
}

inline QueryMode parse_query_mode(const std::string& name) {
  if (name == "mention-only") return QueryMode::kMentionOnly;
  if (name == "full-context") return QueryMode::kFullContext;
  if (name == "keywords") return QueryMode::kKeywords;
  if (name == "keywords-only") return QueryMode::kKeywordsOnly;
  throw std::invalid_argument("unknown query mode '" + name + "'");
}

struct QuerySpec {
  QueryMode mode = QueryMode::kMentionOnly;
  std::set<std::string> mention_words;
  // Extracted keywords in keyword modes; the whole filtered context window in
  // full-context mode; empty in mention-only mode.
  std::set<std::string> keywords;

  std::set<std::string> final_words() const {
    switch (mode) {
      case QueryMode::kMentionOnly:
        return mention_words;
      case QueryMode::kFullContext:
      case QueryMode::kKeywordsOnly:
        return keywords;
      case QueryMode::kKeywords: {
        std::set<std::string> q = mention_words;
        q.insert(keywords.begin(), keywords.end());
        return q;
      }
    }
    return {};
  }
};

// Word-level context window mirroring the piece-level extractor budget:
// the last left_len words before the mention and the first right_len after.
inline WordSequence window_context_words(const MentionRecord& mention,
                                         const InputWindow& window) {
  WordSequence left = tokenize_words(mention.left_context);
  WordSequence center = tokenize_words(mention.mention);
  WordSequence right = tokenize_words(mention.right_context);

  WordSequence out;
  const std::size_t left_keep =
      std::min(left.size(), static_cast<std::size_t>(std::max(window.left_len, 0)));
  out.insert(out.end(), left.end() - static_cast<std::ptrdiff_t>(left_keep), left.end());
  out.insert(out.end(), center.begin(), center.end());
  const std::size_t right_keep =
      std::min(right.size(), static_cast<std::size_t>(std::max(window.right_len, 0)));
  out.insert(out.end(), right.begin(), right.begin() + static_cast<std::ptrdiff_t>(right_keep));
  return out;
}

inline QuerySpec build_query(const MentionRecord& mention, const ExtractorBundle* bundle,
                             QueryMode mode, std::size_t k, const CorpusStats& stats,
                             const InputWindow& window = {}) {
  QuerySpec spec;
  spec.mode = mode;
  for (const auto& w : tokenize_words(mention.mention))
    if (!stats.is_stopword(w)) spec.mention_words.insert(w);

  switch (mode) {
    case QueryMode::kMentionOnly:
      break;
    case QueryMode::kFullContext:
      for (const auto& w : window_context_words(mention, window))
        if (!stats.is_stopword(w)) spec.keywords.insert(w);
      break;
    case QueryMode::kKeywords:
    case QueryMode::kKeywordsOnly: {
      if (!bundle) throw std::invalid_argument("query mode requires a trained model");
      ExtractorInput input = build_extractor_input(mention, bundle->vocab, window);
      for (const auto& kw : extract_keywords(bundle->model, input, k, bundle->stopwords))
        spec.keywords.insert(kw.word);
      break;
    }
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Recall@n evaluation, Table-2 style aggregation.

struct DomainEval {
  std::string domain;
  double recall = 0.0;  // percent
  int count = 0;
};

struct EvalReport {
  std::size_t n = 0;
  std::vector<DomainEval> domains;
  double macro_avg = 0.0;
  double micro_avg = 0.0;
};

inline EvalReport aggregate_report(std::vector<DomainEval> domains, std::size_t n) {
  if (domains.empty()) throw std::invalid_argument("no domains to aggregate");
  EvalReport report;
  report.n = n;
  double recall_sum = 0.0;
  double weighted_sum = 0.0;
  std::int64_t total = 0;
  for (const auto& d : domains) {
    recall_sum += d.recall;
    weighted_sum += d.recall * static_cast<double>(d.count);
    total += d.count;
  }
  report.macro_avg = recall_sum / static_cast<double>(domains.size());
  report.micro_avg = total > 0 ? weighted_sum / static_cast<double>(total) : 0.0;
  report.domains = std::move(domains);
  return report;
}

using QueryBuilder = std::function<QuerySpec(const MentionRecord&)>;

inline DomainEval evaluate_domain(const std::string& domain,
                                  const std::vector<MentionRecord>& mentions,
                                  const InvertedIndex& index, const QueryBuilder& builder,
                                  std::size_t n) {
  if (mentions.empty()) throw std::invalid_argument("empty mention set");
  std::size_t hits = 0;
  for (const auto& mention : mentions) {
    index.require_ordinal(mention.gold_entity_id);  // every gold must resolve
    RetrievalResult result = index.retrieve(builder(mention).final_words(), n);
    for (const auto& scored : result) {
      if (scored.entity_id == mention.gold_entity_id) {
        ++hits;
        break;
      }
    }
  }
  DomainEval eval;
  eval.domain = domain;
  eval.count = static_cast<int>(mentions.size());
  eval.recall = 100.0 * static_cast<double>(hits) / static_cast<double>(mentions.size());
  return eval;
}

inline nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["n"] = report.n;
  auto domains = nlohmann::json::array();
  for (const auto& d : report.domains)
    domains.push_back(
        {{"domain", d.domain}, {"n", report.n}, {"recall", d.recall}, {"count", d.count}});
  j["domains"] = std::move(domains);
  j["macro_avg"] = report.macro_avg;
  j["micro_avg"] = report.micro_avg;
  return j;
}

// Two-decimal human table; the JSON output keeps full precision.
inline void print_report(std::ostream& out, const EvalReport& report) {
  out << std::left << std::setw(24) << "domain" << std::right << std::setw(12)
      << ("recall@" + std::to_string(report.n)) << std::setw(10) << "count" << "\n";
  out << std::fixed << std::setprecision(2);
  for (const auto& d : report.domains)
    out << std::left << std::setw(24) << d.domain << std::right << std::setw(12) << d.recall
        << std::setw(10) << d.count << "\n";
  out << std::left << std::setw(24) << "macro avg" << std::right << std::setw(12)
      << report.macro_avg << "\n";
  out << std::left << std::setw(24) << "micro avg" << std::right << std::setw(12)
      << report.micro_avg << "\n";
  out.unsetf(std::ios::fixed);
  out << std::setprecision(6);
}

// Dev-set Recall@n with queries built from the in-training model.
inline DevMetric dev_recall_metric(std::vector<MentionRecord> dev_mentions,
                                   const InvertedIndex& index, const WordPieceVocab& vocab,
                                   std::size_t k, std::size_t n, const InputWindow& window) {
  return DevMetric{
      "dev_recall@" + std::to_string(n), true,
      [dev = std::move(dev_mentions), &index, &vocab, k, n, window](
          const TokenScoringModel& model) {
        ExtractorBundle bundle{model, vocab, index.stats().stopwords};
        auto builder = [&](const MentionRecord& m) {
          return build_query(m, &bundle, QueryMode::kKeywords, k, index.stats(), window);
        };
        return evaluate_domain("dev", dev, index, builder, n).recall;
      }};
}

// ---------------------------------------------------------------------------
// Explain report: the context with the mention and extracted keywords marked,
// the description with overlapping words marked, and per-keyword BM25 scores.

struct ExplainReport {
  std::string mention_id;
  std::string entity_id;
  std::string entity_title;
  std::vector<ExtractedKeyword> keywords;        // model scores, ranked
  std::vector<ScoredKeyword> keyword_bm25;       // s(w, E) per keyword
  std::set<std::string> overlap;                 // keywords found in the description
  std::string marked_context;
  std::string marked_description;
};

namespace detail {

// Wraps every token whose normalized word satisfies `mark` in *stars*.
inline std::string mark_words(const std::string& text,
                              const std::function<bool(const std::string&)>& mark) {
  std::string out;
  std::size_t cursor = 0;
  for (const auto& span : tokenize_spans(text)) {
    out.append(text, cursor, span.begin - cursor);
    const std::string surface = text.substr(span.begin, span.end - span.begin);
    if (mark(span.word))
      out += "*" + surface + "*";
    else
      out += surface;
    cursor = span.end;
  }
  out.append(text, cursor, text.size() - cursor);
  return out;
}

}  // namespace detail

inline ExplainReport explain(const MentionRecord& mention, const ExtractorBundle& bundle,
                             const InvertedIndex& index, const EntityRecord& entity,
                             std::size_t k, const InputWindow& window = {}) {
  ExplainReport report;
  report.mention_id = mention.mention_id;
  report.entity_id = entity.entity_id;
  report.entity_title = entity.title;

  ExtractorInput input = build_extractor_input(mention, bundle.vocab, window);
  report.keywords = extract_keywords(bundle.model, input, k, bundle.stopwords);

  const std::int32_t ordinal = index.require_ordinal(entity.entity_id);
  std::set<std::string> keyword_set;
  for (const auto& kw : report.keywords) {
    keyword_set.insert(kw.word);
    report.keyword_bm25.push_back(ScoredKeyword{kw.word, index.word_score(kw.word, ordinal)});
  }

  const std::set<std::string> entity_words = word_set(entity.description, index.stats());
  for (const auto& word : keyword_set)
    if (entity_words.count(word)) report.overlap.insert(word);

  auto in_keywords = [&keyword_set](const std::string& w) { return keyword_set.count(w) > 0; };
  report.marked_context = detail::mark_words(mention.left_context, in_keywords) + " [[" +
                          detail::mark_words(mention.mention, in_keywords) + "]] " +
                          detail::mark_words(mention.right_context, in_keywords);
  report.marked_description = detail::mark_words(
      entity.description, [&](const std::string& w) { return report.overlap.count(w) > 0; });
  return report;
}

inline void print_explain(std::ostream& out, const ExplainReport& report) {
  out << "mention " << report.mention_id << " -> entity " << report.entity_id << " ("
      << report.entity_title << ")\n\n";
  out << "context (mention in [[..]], extracted keywords in *..*):\n"
      << report.marked_context << "\n\n";
  out << "entity description (overlapping keywords in *..*):\n"
      << report.marked_description << "\n\n";
  out << "keywords (extractor score / bm25 word-document score):\n";
  for (std::size_t i = 0; i < report.keywords.size(); ++i) {
    out << "  " << std::left << std::setw(20) << report.keywords[i].word << std::right
        << std::fixed << std::setprecision(4) << std::setw(8) << report.keywords[i].score
        << std::setw(10) << report.keyword_bm25[i].score;
    if (report.overlap.count(report.keywords[i].word)) out << "   (in description)";
    out << "\n";
  }
  if (report.keywords.empty()) out << "  (none)\n";
  out.unsetf(std::ios::fixed);
  out << std::setprecision(6);
}

// ---------------------------------------------------------------------------
// Experiment runner: per-domain index + distillation + training + per-mode
// evaluation, with multi-seed means for model-dependent modes.

struct ExperimentConfig {
  std::vector<DomainPaths> domains;
  std::vector<QueryMode> modes = {QueryMode::kMentionOnly, QueryMode::kFullContext,
                                  QueryMode::kKeywords};
  std::size_t k = 32;
  std::size_t n = 64;
  std::vector<std::uint64_t> seeds = {42};
  double stopword_threshold = 0.20;
  Bm25Params bm25;
  nn::ModelHyper model;  // vocab_size is filled per domain
  TrainConfig train_cfg;
  InputWindow window;
  std::string output_dir = ".";
  bool strict = true;
};

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": malformed JSON (" + e.what() + ")");
  }

  ExperimentConfig config;
  for (const auto& d : j.at("domains")) {
    DomainPaths p;
    p.name = d.at("name").get<std::string>();
    p.entities = d.at("entities").get<std::string>();
    p.train = d.at("train").get<std::string>();
    p.dev = d.at("dev").get<std::string>();
    p.test = d.at("test").get<std::string>();
    config.domains.push_back(std::move(p));
  }
  if (j.contains("modes")) {
    config.modes.clear();
    for (const auto& m : j.at("modes")) config.modes.push_back(parse_query_mode(m));
  }
  config.k = j.value("k", config.k);
  config.n = j.value("n", config.n);
  if (j.contains("seeds")) config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  config.stopword_threshold = j.value("stopword_threshold", config.stopword_threshold);
  config.bm25.k1 = j.value("k1", config.bm25.k1);
  config.bm25.b = j.value("b", config.bm25.b);
  if (j.contains("model")) {
    const auto& m = j.at("model");
    config.model.d_model = m.value("d_model", config.model.d_model);
    config.model.n_layers = m.value("n_layers", config.model.n_layers);
    config.model.n_heads = m.value("n_heads", config.model.n_heads);
    config.model.d_ff = m.value("d_ff", config.model.d_ff);
    config.model.max_len = m.value("max_len", config.model.max_len);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    config.train_cfg.learning_rate = t.value("learning_rate", config.train_cfg.learning_rate);
    config.train_cfg.weight_decay = t.value("weight_decay", config.train_cfg.weight_decay);
    config.train_cfg.batch_size = t.value("batch_size", config.train_cfg.batch_size);
    config.train_cfg.epochs = t.value("epochs", config.train_cfg.epochs);
  }
  config.window.max_len = config.model.max_len;
  config.window.left_len = j.value("left_len", config.window.left_len);
  config.window.right_len = j.value("right_len", config.window.right_len);
  config.output_dir = j.value("output_dir", config.output_dir);
  config.strict = j.value("strict", config.strict);
  return config;
}

struct ExperimentResult {
  // mode name -> mean report over seeds (single run for deterministic modes)
  std::map<std::string, EvalReport> mean_reports;
};

namespace detail {

template <typename F>
auto run_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error("stage '" + stage + "' failed: " + e.what());
  }
}

inline EvalReport mean_over_seeds(const std::vector<EvalReport>& reports) {
  std::vector<DomainEval> domains = reports.front().domains;
  for (auto& d : domains) d.recall = 0.0;
  for (const auto& report : reports)
    for (std::size_t i = 0; i < domains.size(); ++i) domains[i].recall += report.domains[i].recall;
  for (auto& d : domains) d.recall /= static_cast<double>(reports.size());
  return aggregate_report(std::move(domains), reports.front().n);
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream& log) {
  if (config.domains.empty()) throw std::invalid_argument("experiment needs at least one domain");

  struct DomainState {
    std::string name;
    IndexArtifact artifact;
    std::vector<MentionRecord> test;
    std::vector<MentionRecord> dev;
    std::vector<TrainExample> train_examples;
    std::vector<ExtractorBundle> trained;  // one per seed
  };

  std::vector<DomainState> states;
  for (const auto& domain : config.domains) {
    DomainState state;
    state.name = domain.name;

    auto [entities, train_mentions] = detail::run_stage(
        "load:" + domain.name,
        [&] { return load_corpus(domain.entities, domain.train, config.strict, &log); });
    state.dev = detail::run_stage("load-dev:" + domain.name,
                                  [&] { return load_mentions(domain.dev); });
    state.test = detail::run_stage("load-test:" + domain.name,
                                   [&] { return load_mentions(domain.test); });

    detail::run_stage("index:" + domain.name, [&] {
      state.artifact = IndexArtifact::build(entities, config.stopword_threshold, config.bm25);
      return 0;
    });

    detail::run_stage("distill:" + domain.name, [&] {
      std::map<std::string, const EntityRecord*> by_id;
      for (const auto& e : entities) by_id[e.entity_id] = &e;
      for (const auto& mention : train_mentions) {
        auto it = by_id.find(mention.gold_entity_id);
        if (it == by_id.end()) continue;  // already reported by the lenient loader
        WeakLabelExample example = distill_example(mention, *it->second, state.artifact.index,
                                                   state.artifact.vocab, config.k, config.window);
        state.train_examples.push_back(TrainExample{example.input, example.labels});
      }
      if (state.train_examples.empty())
        throw std::runtime_error("no usable training mentions");
      return 0;
    });

    const bool needs_model =
        std::any_of(config.modes.begin(), config.modes.end(), [](QueryMode m) {
          return m == QueryMode::kKeywords || m == QueryMode::kKeywordsOnly;
        });
    if (needs_model) {
      nn::ModelHyper hyper = config.model;
      hyper.vocab_size = static_cast<int>(state.artifact.vocab.size());
      for (std::uint64_t seed : config.seeds) {
        detail::run_stage("train:" + domain.name + ":seed" + std::to_string(seed), [&] {
          TokenScoringModel model = TokenScoringModel::init(hyper, seed);
          TrainConfig train_cfg = config.train_cfg;
          train_cfg.seed = seed;
          train_cfg.k = config.k;
          DevMetric dev = dev_recall_metric(state.dev, state.artifact.index,
                                            state.artifact.vocab, config.k, config.n,
                                            config.window);
          TrainLog tlog = train(model, state.train_examples, train_cfg, &dev);
          log << "[train] domain=" << domain.name << " seed=" << seed
              << " best_epoch=" << tlog.best_epoch << " best_" << tlog.dev_metric_name << "="
              << tlog.best_metric << "\n";
          state.trained.push_back(ExtractorBundle{std::move(model), state.artifact.vocab,
                                                  state.artifact.index.stats().stopwords});
          return 0;
        });
      }
    }
    states.push_back(std::move(state));
  }

  std::filesystem::create_directories(config.output_dir);

  ExperimentResult result;
  for (QueryMode mode : config.modes) {
    const std::string mode_name = to_string(mode);
    const bool model_mode = mode == QueryMode::kKeywords || mode == QueryMode::kKeywordsOnly;
    const std::size_t runs = model_mode ? config.seeds.size() : 1;

    std::vector<EvalReport> reports;
    for (std::size_t run = 0; run < runs; ++run) {
      std::vector<DomainEval> domains;
      for (const auto& state : states) {
        const ExtractorBundle* bundle = model_mode ? &state.trained[run] : nullptr;
        QueryBuilder builder = [&, bundle](const MentionRecord& m) {
          return build_query(m, bundle, mode, config.k, state.artifact.index.stats(),
                             config.window);
        };
        domains.push_back(detail::run_stage(
            "eval:" + mode_name + ":" + state.name,
            [&] { return evaluate_domain(state.name, state.test, state.artifact.index,
                                         builder, config.n); }));
      }
      reports.push_back(aggregate_report(std::move(domains), config.n));
    }

    EvalReport mean = detail::mean_over_seeds(reports);

    nlohmann::json j;
    j["mode"] = mode_name;
    j["n"] = config.n;
    j["k"] = config.k;
    auto runs_json = nlohmann::json::array();
    for (std::size_t run = 0; run < reports.size(); ++run) {
      nlohmann::json entry;
      if (model_mode) entry["seed"] = config.seeds[run];
      entry["report"] = report_to_json(reports[run]);
      runs_json.push_back(std::move(entry));
    }
    j["runs"] = std::move(runs_json);
    j["mean"] = report_to_json(mean);

    const std::string out_path =
        (std::filesystem::path(config.output_dir) / ("eval_" + mode_name + ".json")).string();
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write report: " + out_path);
    out << j.dump(2) << "\n";

    log << "\n== mode " << mode_name;
    if (model_mode && config.seeds.size() > 1)
      log << " (mean over " << config.seeds.size() << " seeds)";
    log << " ==\n";
    print_report(log, mean);
    result.mean_reports[mode_name] = std::move(mean);
  }
  return result;
}

inline ExperimentResult run_experiment(const std::string& config_path, std::ostream& log) {
  return run_experiment(load_experiment_config(config_path), log);
}

}  // namespace lexlink
