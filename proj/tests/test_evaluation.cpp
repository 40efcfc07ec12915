#include <doctest.h>

#include "guardsim/error.hpp"
#include "guardsim/evaluation.hpp"
#include "test_support.hpp"

using namespace guardsim;

namespace {

std::vector<ModerationVerdict> verdicts(std::size_t flagged, std::size_t total) {
  std::vector<ModerationVerdict> v;
  for (std::size_t i = 0; i < total; ++i) v.push_back({"x" + std::to_string(i), i < flagged, {}});
  return v;
}

}  // namespace

TEST_CASE("harmfulness score is exact counting") {
  const auto third = harmfulness_score(verdicts(1, 3));
  CHECK(third.flagged == 1);
  CHECK(third.total == 3);
  CHECK(third.hs_percent() == "33.33%");
  CHECK(harmfulness_score(verdicts(0, 7)).hs_percent() == "0.00%");
  CHECK(harmfulness_score(verdicts(190, 300)).hs_percent() == "63.33%");
  CHECK(harmfulness_score(verdicts(2, 3)).hs_percent() == "66.67%");
  CHECK(harmfulness_score(verdicts(5, 5)).hs_percent() == "100.00%");
  CHECK(format_percent(1, 8) == "12.50%");
  CHECK(format_percent(1, 800) == "0.13%");
  CHECK_THROWS_AS(harmfulness_score({}), ValidationError);
}

TEST_CASE("rouge-1 hand cases") {
  CHECK(rouge1_f1("the cat sat", "the cat") == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(rouge1_f1("Same words here.", "same words here") == 1.0);
  CHECK(rouge1_f1("alpha beta", "gamma delta") == 0.0);
  CHECK(rouge_tokens("  Hello,   WORLD! (ok) x") == std::vector<std::string>{"hello", "world", "ok", "x"});
  CHECK(rouge_tokens("don't stop") == std::vector<std::string>{"don't", "stop"});
  CHECK_THROWS_AS(rouge1_f1("...", "the cat"), ValidationError);
  CHECK(mean_rouge1_f1({"the cat sat", "a b"}, {"the cat", "a b"}) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK_THROWS_AS(mean_rouge1_f1({"a"}, {"a", "b"}), ValidationError);
}

TEST_CASE("rouge-1 is symmetric and matches count-map oracle") {
  std::mt19937_64 gen(2);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f"};
  std::uniform_int_distribution<std::size_t> len(1, 12), pick(0, vocab.size() - 1);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> x, y;
    std::string sx, sy;
    for (std::size_t j = len(gen); j > 0; --j) x.push_back(vocab[pick(gen)]), sx += x.back() + " ";
    for (std::size_t j = len(gen); j > 0; --j) y.push_back(vocab[pick(gen)]), sy += y.back() + " ";
    CHECK(rouge1_f1(sx, sy) == rouge1_f1(sy, sx));
    CHECK(std::abs(rouge1_f1(sx, sy) - oracle::unigram_f1(x, y)) < 1e-12);
  }
}

TEST_CASE("response files") {
  testsupport::TempDir dir;
  testsupport::write_text(dir / "r.jsonl",
                          "{\"id\":\"a\",\"prompt\":\"p\",\"response\":\"r\"}\n{\"instruction\":\"p2\",\"output\":\"\"}\n");
  const auto r = load_responses(dir / "r.jsonl", "resp");
  REQUIRE(r.size() == 2);
  CHECK(r[1].id == "resp:000001");
  CHECK(r[1].prompt == "p2");
  CHECK(r[1].response.empty());
  CHECK_THROWS_AS(load_responses(dir / "missing.jsonl", "x"), IoError);
}
