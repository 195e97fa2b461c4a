// Integration tests driving the qgen binary end to end on tiny inputs.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = QGEN_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

int run_loud(const std::string& args) { return std::system((kCli + " " + args).c_str()); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

json load_json(const std::string& path) { return json::parse(slurp(path)); }

struct TempDir {
  fs::path dir;
  explicit TempDir(const std::string& name) : dir(fs::path("cli_tmp") / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  std::string operator/(const std::string& sub) const { return (dir / sub).string(); }
};

}  // namespace

TEST_CASE("cli: usage errors exit 1, missing data exits 2") {
  CHECK(run("definitely-not-a-command") != 0);
  const int usage = run("train-qg");  // missing required flags
  CHECK(WEXITSTATUS(usage) == 1);
  const int data = run("eval-qa --checkpoint nope.ckpt --data nope.jsonl --out x.json");
  CHECK(WEXITSTATUS(data) == 2);
}

TEST_CASE("cli: the documented desk-scale pipeline runs end to end") {
  TempDir t("pipeline");
  const std::string data = t / "data";

  // 1. toy corpus
  REQUIRE(run_loud("make-toy-data --out " + data +
                   " --seed 7 --n-train 24 --n-dev 8 --n-unlabeled 10 --pairs 40") == 0);
  REQUIRE(fs::exists(data + "/train.jsonl"));
  REQUIRE(fs::exists(data + "/manifest.json"));

  // 2. teacher-forced QG (tiny budget)
  const std::string qg = t / "qg";
  REQUIRE(run_loud("train-qg --train " + data + "/train.jsonl --dev " + data +
                   "/dev.jsonl --out " + qg +
                   " --seed 7 --epochs 2 --patience 5 --batch-size 8 --hidden 16 --word-dim 8 "
                   "--tag-dim 4 --dropout 0 --max-len 10") == 0);
  REQUIRE(fs::exists(qg + "/qg.ckpt"));
  REQUIRE(fs::exists(qg + "/metrics.jsonl"));

  // 3. QPC
  const std::string qpc = t / "qpc";
  REQUIRE(run_loud("train-qpc --pairs-train " + data + "/qpc_pairs_train.jsonl --pairs-dev " +
                   data + "/qpc_pairs_dev.jsonl --out " + qpc +
                   " --seed 7 --epochs 2 --hidden 8 --word-dim 8 --mlp-hidden 8 --dropout 0") == 0);
  REQUIRE(fs::exists(qpc + "/qpc.ckpt"));

  // 4. QA on ground truth
  const std::string qa = t / "qa";
  REQUIRE(run_loud("train-qa --train " + data + "/train.jsonl --dev " + data + "/dev.jsonl --out " +
                   qa + " --seed 7 --epochs 2 --hidden 8 --word-dim 8 --dropout 0") == 0);
  REQUIRE(fs::exists(qa + "/qa.ckpt"));

  // 5. RL fine-tune with both rewards at 3:1
  const std::string qg_rl = t / "qg_rl";
  REQUIRE(run_loud("train-qg --train " + data + "/train.jsonl --dev " + data +
                   "/dev.jsonl --out " + qg_rl + " --seed 7 --init " + qg +
                   "/qg.ckpt --reward qpp+qap --alt-rate 3:1 --qpc " + qpc + "/qpc.ckpt --qa " +
                   qa + "/qa.ckpt --rl-epochs 1 --batch-size 8 --max-len 10") == 0);
  REQUIRE(fs::exists(qg_rl + "/qg.ckpt"));

  // 6. generate from new articles + QAP scoring
  const std::string syn = t / "synthetic.jsonl";
  REQUIRE(run_loud("generate --checkpoint " + qg + "/qg.ckpt --data " + data +
                   "/unlabeled.jsonl --source new --qa " + qa + "/qa.ckpt --out " + syn +
                   " --beam 2 --max-len 10") == 0);
  REQUIRE(fs::exists(syn));

  // 7. filter sweep + train-qa-semi + eval
  const std::string kept = t / "kept.jsonl";
  REQUIRE(run_loud("filter --data " + syn + " --out " + kept +
                   " --epsilon 0.0 --sweep --ground-truth " + data + "/train.jsonl") == 0);
  json report = load_json(kept + ".report.json");
  REQUIRE(report.contains("sweep"));
  CHECK(report["sweep"].size() == 5);

  const std::string qa_semi = t / "qa_semi";
  REQUIRE(run_loud("train-qa-semi --train " + data + "/train.jsonl --dev " + data +
                   "/dev.jsonl --synthetic " + kept + " --out " + qa_semi +
                   " --seed 7 --epochs 2 --hidden 8 --word-dim 8 --dropout 0 --batch-size 8") == 0);
  REQUIRE(fs::exists(qa_semi + "/descriptor.json"));

  const std::string qg_report = t / "qg_eval.json";
  REQUIRE(run_loud("eval-qg --checkpoint " + qg + "/qg.ckpt --data " + data +
                   "/dev.jsonl --out " + qg_report + " --qpc " + qpc + "/qpc.ckpt --qa " + qa +
                   "/qa.ckpt --max-len 10") == 0);
  json qg_rep = load_json(qg_report);
  CHECK(qg_rep.contains("bleu4"));
  CHECK(qg_rep.contains("qpp"));

  const std::string qa_report = t / "qa_eval.json";
  const std::string preds = t / "preds.jsonl";
  REQUIRE(run_loud("eval-qa --checkpoint " + qa + "/qa.ckpt --data " + data + "/dev.jsonl --out " +
                   qa_report + " --predictions " + preds) == 0);
  CHECK(load_json(qa_report).contains("em"));
  REQUIRE(fs::exists(preds));

  const std::string qbe_report = t / "qa_based.json";
  REQUIRE(run_loud("qa-based-eval --qg " + qg + "/qg.ckpt --unlabeled " + data +
                   "/unlabeled.jsonl --dev " + data + "/dev.jsonl --out " + qbe_report +
                   " --seed 7 --epochs 2 --qa-hidden 8 --qa-word-dim 8") == 0);
  CHECK(load_json(qbe_report).contains("em"));

  // 8. grad-check command
  CHECK(run("grad-check --trials 2 --seed 5") == 0);
}

TEST_CASE("cli: idempotent re-runs byte-identical outputs (manifest timestamps excluded)") {
  TempDir t("determinism");
  const std::string d1 = t / "a", d2 = t / "b";
  REQUIRE(run("make-toy-data --out " + d1 + " --seed 13 --n-train 12 --n-dev 4 --n-unlabeled 4 --pairs 10") == 0);
  REQUIRE(run("make-toy-data --out " + d2 + " --seed 13 --n-train 12 --n-dev 4 --n-unlabeled 4 --pairs 10") == 0);
  for (const char* f : {"train.jsonl", "dev.jsonl", "unlabeled.jsonl", "qpc_pairs_train.jsonl"})
    CHECK(slurp(d1 + "/" + f) == slurp(d2 + "/" + f));
  json m1 = load_json(d1 + "/manifest.json");
  json m2 = load_json(d2 + "/manifest.json");
  m1.erase("timestamp");
  m2.erase("timestamp");
  // output paths differ only by the directory prefix
  CHECK(m1["seed"] == m2["seed"]);
  for (size_t i = 0; i < m1["outputs"].size(); ++i)
    CHECK(m1["outputs"][i]["digest"] == m2["outputs"][i]["digest"]);
}

TEST_CASE("cli: commands never mutate their inputs") {
  TempDir t("inputs");
  const std::string data = t / "data";
  REQUIRE(run("make-toy-data --out " + data + " --seed 3 --n-train 10 --n-dev 4 --n-unlabeled 4 --pairs 8") == 0);
  const std::string before = slurp(data + "/train.jsonl");
  REQUIRE(run("train-qa --train " + data + "/train.jsonl --dev " + data + "/dev.jsonl --out " +
              (t / "qa") + " --seed 3 --epochs 1 --hidden 8 --word-dim 8 --dropout 0") == 0);
  CHECK(slurp(data + "/train.jsonl") == before);
}
