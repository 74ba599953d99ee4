// Writes a synthetic vocabulary-mismatch corpus plus a ready-to-run
// experiment config, so the whole pipeline can be exercised without any
// external dataset.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "lexlink/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic demo corpus"};
  std::string out_dir = "demo";
  lexlink::synth::MismatchCorpusSpec spec;
  app.add_option("out_dir", out_dir, "output directory");
  app.add_option("--entities", spec.n_entities, "number of entities");
  app.add_option("--train", spec.n_train, "training mentions");
  app.add_option("--dev", spec.n_dev, "dev mentions");
  app.add_option("--test", spec.n_test, "test mentions");
  app.add_option("--seed", spec.seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto corpus = lexlink::synth::make_mismatch_corpus(spec);
    auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
    lexlink::synth::save_entities_jsonl(corpus.entities, path("entities.jsonl"));
    lexlink::synth::save_mentions_jsonl(corpus.train, path("train.jsonl"));
    lexlink::synth::save_mentions_jsonl(corpus.dev, path("dev.jsonl"));
    lexlink::synth::save_mentions_jsonl(corpus.test, path("test.jsonl"));

    nlohmann::json manifest{
        {"domains",
         {{{"name", "synthetic"},
           {"entities", path("entities.jsonl")},
           {"train", path("train.jsonl")},
           {"dev", path("dev.jsonl")},
           {"test", path("test.jsonl")}}}}};
    std::ofstream(path("manifest.json")) << manifest.dump(2) << "\n";

    nlohmann::json config = manifest;
    config["modes"] = {"mention-only", "full-context", "keywords", "keywords-only"};
    config["k"] = 8;
    config["n"] = 64;
    config["seeds"] = {42};
    config["model"] = {{"d_model", 32}, {"n_layers", 2}, {"n_heads", 4}, {"d_ff", 64}};
    config["train"] = {{"learning_rate", 3e-3}, {"epochs", 20}};
    config["output_dir"] = (fs::path(out_dir) / "reports").string();
    std::ofstream(path("experiment.json")) << config.dump(2) << "\n";

    std::cout << "wrote " << corpus.entities.size() << " entities and "
              << corpus.train.size() + corpus.dev.size() + corpus.test.size()
              << " mentions under " << out_dir << "\n"
              << "next: lexlink experiment --config " << path("experiment.json") << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
