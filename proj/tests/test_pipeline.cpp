#include <doctest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <map>
#include <set>

#include "guardsim/artifacts.hpp"
#include "guardsim/corpus.hpp"
#include "guardsim/error.hpp"
#include "guardsim/pipeline.hpp"
#include "test_support.hpp"

using namespace guardsim;
namespace fs = std::filesystem;

namespace {

const fs::path kToy = fs::path(GUARDSIM_SOURCE_DIR) / "data" / "toy";

PipelineConfig toy_config(const fs::path& out) {
  PipelineConfig c;
  c.out_dir = out;
  c.align_emb = kToy / "alignment.emb";
  c.down_emb = kToy / "downstream.emb";
  c.align_corpus = kToy / "alignment.jsonl";
  c.down_corpus = kToy / "downstream.jsonl";
  c.n = 20;
  c.seed = 11;
  c.cluster_k = 5;
  c.logprobs = (kToy / "alignment_logprobs.jsonl").string();
  c.candidates = kToy / "candidates" / "manifest.json";
  return c;
}

std::string without_timestamp(std::string text) {
  const auto at = text.find("\"generated_at\"");
  if (at == std::string::npos) return text;
  const auto end = text.find('\n', at);
  return text.erase(at, end - at);
}

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args, const fs::path& scratch) {
  const auto log = scratch / "cli.log";
  const std::string cmd = std::string("\"") + GUARDSIM_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testsupport::read_text(log)};
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("toy fixture: n=20 gives 20/20/20 ids that match the oracle") {
  testsupport::TempDir dir;
  const auto result = run_pipeline(toy_config(dir.path()));
  CHECK(result.selection.high_ids.size() == 20);
  CHECK(result.selection.low_ids.size() == 20);
  CHECK(result.selection.random_ids.size() == 20);

  const auto align = read_matrix(kToy / "alignment.emb");
  const auto down = read_matrix(kToy / "downstream.emb");
  const auto scores = oracle::scores(testsupport::rows_of(align), testsupport::rows_of(down));
  CHECK(as_set(result.selection.high_ids) == oracle::top_n(scores, align.ids, 20, true));
  CHECK(as_set(result.selection.low_ids) == oracle::top_n(scores, align.ids, 20, false));

  const auto sel = read_json(dir / "selection.json", "test");
  CHECK(sel["high_ids"].size() == 20);
  CHECK(sel["provenance"]["inputs"]["alignment_matrix"] == align.digest);
  for (const char* f : {"scores.json", "selection.json", "high.jsonl", "low.jsonl", "random.jsonl", "clusters.json",
                        "contamination.json", "risk.json", "risk.csv", "run.json"})
    CHECK_MESSAGE(fs::exists(dir / f), f);
  CHECK(load_corpus(dir / "high.jsonl", "high").size() == 20);
}

TEST_CASE("re-running the pipeline reproduces every artifact") {
  testsupport::TempDir dir;
  const auto begin = std::chrono::steady_clock::now();
  const auto first = run_pipeline(toy_config(dir.path()));
  std::map<std::string, std::string> snapshot;
  for (const auto& path : first.artifacts) snapshot[path.filename().string()] = testsupport::read_text(path);
  const auto second = run_pipeline(toy_config(dir.path()));
  CHECK(std::chrono::steady_clock::now() - begin < std::chrono::seconds(10));
  REQUIRE(second.artifacts.size() == first.artifacts.size());
  for (const auto& path : second.artifacts) {
    const auto name = path.filename().string();
    CHECK_MESSAGE(without_timestamp(snapshot[name]) == without_timestamp(testsupport::read_text(path)), name);
  }
}

TEST_CASE("pipeline errors carry the module name") {
  testsupport::TempDir dir;
  auto c = toy_config(dir.path());
  c.align_emb = dir / "nope.emb";
  CHECK_THROWS_WITH_AS(run_pipeline(c), doctest::Contains("nope.emb"), IoError);
  c = toy_config(dir.path());
  c.down_corpus = kToy / "alignment.jsonl";
  CHECK_THROWS_AS(run_pipeline(c), ValidationError);
}

TEST_CASE("cli: missing embedding file exits 2 and names the path") {
  testsupport::TempDir dir;
  const auto r = cli("sim score --align \"" + (dir / "absent.emb").string() + "\" --down \"" +
                         (kToy / "downstream.emb").string() + "\"",
                     dir.path());
  CHECK(r.code == 2);
  CHECK(r.out.find("absent.emb") != std::string::npos);
}

TEST_CASE("cli: exit codes for validation errors and bad flags") {
  testsupport::TempDir dir;
  testsupport::write_text(dir / "bad.jsonl", "{\"instruction\":\"x\",\"output\":\"\"}\n");
  CHECK(cli("corpus validate \"" + (dir / "bad.jsonl").string() + "\"", dir.path()).code == 1);
  CHECK(cli("sim select --n 0 --scores x.json", dir.path()).code == 1);
  CHECK(cli("no-such-command", dir.path()).code == 1);
  CHECK(cli("--help", dir.path()).code == 0);
}

TEST_CASE("cli: service failures exit 3") {
  testsupport::TempDir dir;
  const auto r = cli("embed fetch --corpus \"" + (kToy / "downstream.jsonl").string() + "\" --out \"" +
                         (dir / "d.emb").string() + "\" --endpoint http://127.0.0.1:1 --retries 1",
                     dir.path());
  CHECK(r.code == 3);
}

TEST_CASE("cli: score, select, cluster and rank chain with provenance") {
  testsupport::TempDir dir;
  const auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
  REQUIRE(cli("sim score --align " + q(kToy / "alignment.emb") + " --down " + q(kToy / "downstream.emb") + " --out " +
                  q(dir / "scores.json"),
              dir.path())
              .code == 0);
  REQUIRE(cli("--seed 4 sim select --scores " + q(dir / "scores.json") + " --n 15 --out " + q(dir / "sel.json"),
              dir.path())
              .code == 0);
  const auto sel = read_json(dir / "sel.json", "test");
  CHECK(sel["high_ids"].size() == 15);
  CHECK(sel["seed"] == 4);
  CHECK(sel["provenance"]["inputs"].contains("scores"));

  REQUIRE(cli("sim select --mode per_query --n 2 --align " + q(kToy / "alignment.emb") + " --down " +
                  q(kToy / "downstream.emb") + " --out " + q(dir / "pq.json"),
              dir.path())
              .code == 0);
  CHECK(read_json(dir / "pq.json", "test")["mode"] == "per_query");

  REQUIRE(cli("cluster fit --emb " + q(kToy / "alignment.emb") + " --k 4 --out " + q(dir / "km.json"), dir.path()).code ==
          0);
  REQUIRE(cli("cluster stats --model " + q(dir / "km.json") + " --emb " + q(kToy / "alignment.emb") + " --out " +
                  q(dir / "stats.json"),
              dir.path())
              .code == 0);
  CHECK(read_json(dir / "stats.json", "test")["clusters"].size() == 4);
  REQUIRE(cli("cluster sample --model " + q(dir / "km.json") + " --corpus " + q(kToy / "alignment.jsonl") +
                  " --cluster 0 --n 3 --out " + q(dir / "c0.jsonl"),
              dir.path())
              .code == 0);
  CHECK(load_corpus(dir / "c0.jsonl", "c0").size() == 3);

  REQUIRE(cli("contamination score --corpus " + q(kToy / "alignment.jsonl") + " --logprobs " +
                  q(kToy / "alignment_logprobs.jsonl") + " --out " + q(dir / "cont.json"),
              dir.path())
              .code == 0);
  CHECK(read_json(dir / "cont.json", "test")["corpus_means"].size() == 3);

  REQUIRE(cli("risk rank --user-emb " + q(kToy / "downstream.emb") + " --candidates " +
                  q(kToy / "candidates" / "manifest.json") + " --threshold 0.1 --out " + q(dir / "risk.json") +
                  " --csv " + q(dir / "risk.csv"),
              dir.path())
              .code == 0);
  const auto risk = read_json(dir / "risk.json", "test");
  CHECK(risk["entries"].size() == 3);
  CHECK(risk["provenance"]["inputs"].contains("user_matrix"));
  CHECK(fs::exists(dir / "risk.csv"));
}

TEST_CASE("cli: mixing and rouge") {
  testsupport::TempDir dir;
  const auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
  REQUIRE(cli("--seed 2 corpus mix --base " + q(kToy / "alignment.jsonl") + " --additive " + q(kToy / "downstream.jsonl") +
                  " --ratio 0.1 --out " + q(dir / "mixed.jsonl"),
              dir.path())
              .code == 0);
  CHECK(load_corpus(dir / "mixed.jsonl", "mixed").size() == 220);

  testsupport::write_text(dir / "cand.jsonl", "{\"response\":\"the cat sat\"}\n");
  testsupport::write_text(dir / "ref.jsonl", "{\"reference\":\"the cat\"}\n");
  const auto r = cli("eval rouge --candidates " + q(dir / "cand.jsonl") + " --references " + q(dir / "ref.jsonl"),
                     dir.path());
  CHECK(r.code == 0);
  CHECK(r.out.find("\"mean_f1\": 0.8") != std::string::npos);
}
