// Drives the installed command-line tool through the whole workflow on a
// generated corpus: index -> distill -> train -> extract -> retrieve ->
// eval (two modes) -> explain. Exercises the file formats end to end.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lexlink/synth.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  std::cout << (ok ? "[ok] " : "[FAILED] ") << what << "\n";
  if (!ok) ++failures;
}

int run(const std::string& cmd) {
  std::cout << "$ " << cmd << "\n";
  return std::system(cmd.c_str());
}

}  // namespace

int main() {
  const char* bin_env = std::getenv("LEXLINK_BIN");
  if (!bin_env) {
    std::cerr << "LEXLINK_BIN not set\n";
    return 1;
  }
  const std::string bin = bin_env;

  const fs::path dir = fs::temp_directory_path() / "lexlink_cli_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto at = [&](const char* name) { return (dir / name).string(); };

  lexlink::synth::MismatchCorpusSpec spec;
  spec.n_entities = 60;
  spec.n_train = 30;
  spec.n_dev = 10;
  spec.n_test = 40;
  auto corpus = lexlink::synth::make_mismatch_corpus(spec);
  lexlink::synth::save_entities_jsonl(corpus.entities, at("entities.jsonl"));
  lexlink::synth::save_mentions_jsonl(corpus.train, at("train.jsonl"));
  lexlink::synth::save_mentions_jsonl(corpus.dev, at("dev.jsonl"));
  lexlink::synth::save_mentions_jsonl(corpus.test, at("test.jsonl"));

  check(run(bin + " index --entities " + at("entities.jsonl") + " --out " + at("index.bin")) == 0,
        "index builds");

  check(run(bin + " distill --index " + at("index.bin") + " --entities " + at("entities.jsonl") +
            " --mentions " + at("train.jsonl") + " --out " + at("train_labels.jsonl") +
            " --k 8") == 0,
        "distill train labels");
  check(run(bin + " distill --index " + at("index.bin") + " --entities " + at("entities.jsonl") +
            " --mentions " + at("dev.jsonl") + " --out " + at("dev_labels.jsonl") + " --k 8") == 0,
        "distill dev labels");

  check(run(bin + " train --labels " + at("train_labels.jsonl") + " --dev " +
            at("dev_labels.jsonl") + " --index " + at("index.bin") + " --out " + at("model.ckpt") +
            " --lr 0.003 --epochs 8 --d-model 32 --layers 2 --heads 4 --d-ff 64 --k 8 --n 16 " +
            "> " + at("train.log")) == 0,
        "train writes a checkpoint");
  {
    std::ifstream log(at("train.log"));
    std::stringstream buf;
    buf << log.rdbuf();
    check(buf.str().find("epoch 8") != std::string::npos, "train logs per-epoch losses");
  }

  check(run(bin + " extract --ckpt " + at("model.ckpt") + " --mentions " + at("test.jsonl") +
            " --k 8 --out " + at("keywords.jsonl")) == 0,
        "extract emits keywords");
  {
    std::ifstream in(at("keywords.jsonl"));
    std::string line;
    std::size_t lines = 0;
    bool shaped = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ++lines;
      auto j = nlohmann::json::parse(line);
      shaped = shaped && j.contains("mention_id") && j.contains("keywords");
    }
    check(lines == corpus.test.size() && shaped, "one keyword record per mention");
  }

  // retrieve with a gold signature word must hit its entity first
  check(run(bin + " retrieve --index " + at("index.bin") + " --query \"sigaa sigab\" --n 3 > " +
            at("retrieve.log")) == 0,
        "retrieve runs");
  {
    std::ifstream log(at("retrieve.log"));
    std::stringstream buf;
    buf << log.rdbuf();
    check(buf.str().find("E0") != std::string::npos, "retrieve finds the signature's entity");
  }

  check(run(bin + " eval --index " + at("index.bin") + " --mentions " + at("test.jsonl") +
            " --mode mention-only --n 16 --out " + at("eval_mention.json")) == 0,
        "eval mention-only");
  check(run(bin + " eval --index " + at("index.bin") + " --mentions " + at("test.jsonl") +
            " --mode keywords --ckpt " + at("model.ckpt") + " --k 8 --n 16 --out " +
            at("eval_keywords.json")) == 0,
        "eval keywords");
  {
    std::ifstream a(at("eval_mention.json")), b(at("eval_keywords.json"));
    nlohmann::json ja, jb;
    a >> ja;
    b >> jb;
    const double mention_only = ja["micro_avg"].get<double>();
    const double keywords = jb["micro_avg"].get<double>();
    check(keywords > mention_only, "keyword queries beat mention-only queries");
  }

  check(run(bin + " eval --index " + at("index.bin") + " --mentions " + at("test.jsonl") +
            " --mode keywords --n 16 >/dev/null 2>&1") != 0,
        "eval keyword mode without --ckpt fails");

  check(run(bin + " explain --index " + at("index.bin") + " --ckpt " + at("model.ckpt") +
            " --entities " + at("entities.jsonl") + " --mentions " + at("test.jsonl") +
            " --k 8 > " + at("explain.log")) == 0,
        "explain runs");
  {
    std::ifstream log(at("explain.log"));
    std::stringstream buf;
    buf << log.rdbuf();
    check(buf.str().find("[[") != std::string::npos, "explain brackets the mention");
    check(buf.str().find("*sig") != std::string::npos, "explain stars a signature keyword");
  }

  std::cout << (failures ? "FAILED" : "PASSED") << " cli end-to-end (" << failures
            << " failures)\n";
  return failures == 0 ? 0 : 1;
}
