#include <doctest.h>

#include <cmath>
#include <set>

#include "guardsim/error.hpp"
#include "guardsim/rng.hpp"
#include "guardsim/similarity.hpp"
#include "test_support.hpp"

using namespace guardsim;
using testsupport::make_ids;
using testsupport::to_matrix;

namespace {

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

SimilarityScores scores_of(std::vector<std::string> ids, std::vector<double> values) {
  SimilarityScores s;
  s.alignment_ids = std::move(ids);
  s.scores = std::move(values);
  return s;
}

}  // namespace

TEST_CASE("cosine hand cases") {
  const std::vector<float> e1{1, 0}, e2{0, 1}, d{1, 1};
  CHECK(cosine(e1, e1) == 1.0);
  CHECK(cosine(e1, e2) == 0.0);
  CHECK(cosine(d, e1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-8));
  CHECK(std::abs(cosine(d, e1) - 0.70710678) < 1e-8);
  const std::vector<float> zero{0, 0}, three{1, 2, 3};
  CHECK_THROWS_AS(cosine(zero, e1), ValidationError);
  CHECK_THROWS_AS(cosine(three, e1), ValidationError);
}

TEST_CASE("score of e=[1,0] against {[1,0],[0,1]} is 0.5") {
  const auto align = to_matrix({{1, 0}}, {"e"});
  const auto down = to_matrix({{1, 0}, {0, 1}}, {"x", "y"});
  CHECK(score_alignment(align, down).scores[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("self-similarity is 1") {
  const auto a = to_matrix({{0.3, -2.5, 7}}, {"e"});
  CHECK(score_alignment(a, a).scores[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("3x2 vs 4x2 matches the double loop") {
  std::mt19937_64 gen(11);
  const auto ar = oracle::gaussian_rows(gen, 3, 2), dr = oracle::gaussian_rows(gen, 4, 2);
  const auto s = score_alignment(to_matrix(ar, make_ids("a", 3)), to_matrix(dr, make_ids("d", 4)));
  const auto o = oracle::scores(ar, dr);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(s.scores[i] - o[i]) < 1e-9);
}

TEST_CASE("zero rows and dim mismatch are reported") {
  EmbeddingMatrix z;
  z.corpus_name = "z";
  z.ids = {"good", "bad"};
  z.dim = 2;
  z.rows = {1, 0, 0, 0};
  const auto d = to_matrix({{1, 0}}, {"x"});
  CHECK_THROWS_WITH_AS(score_alignment(z, d), doctest::Contains("'bad'"), ValidationError);
  CHECK_THROWS_AS(score_alignment(to_matrix({{1, 0, 0}}, {"a"}), d), ValidationError);
}

TEST_CASE("top and bottom n by sorted score") {
  const auto s = scores_of({"a", "b", "c"}, {0.9, 0.5, 0.1});
  const auto r = select_subsets(s, 1, 0);
  CHECK(r.high_ids == std::vector<std::string>{"a"});
  CHECK(r.low_ids == std::vector<std::string>{"c"});
  CHECK(r.random_ids.size() == 1);

  const auto all = select_subsets(s, 3, 5);
  CHECK(as_set(all.high_ids) == std::set<std::string>{"a", "b", "c"});
  CHECK(as_set(all.low_ids) == as_set(all.high_ids));
  CHECK(as_set(all.random_ids) == as_set(all.high_ids));

  CHECK_THROWS_AS(select_subsets(s, 0, 0), ValidationError);
  CHECK_THROWS_AS(select_subsets(s, 4, 0), ValidationError);
}

TEST_CASE("ties go to the smaller id") {
  const auto r = select_subsets(scores_of({"d", "b", "c", "a"}, {0.5, 0.5, 0.5, 0.5}), 2, 0);
  CHECK(r.high_ids == std::vector<std::string>{"a", "b"});
  CHECK(r.low_ids == std::vector<std::string>{"a", "b"});
}

TEST_CASE("subset sizes used in the experiments fit a 7,774-prompt corpus") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(7774);
  for (auto& x : v) x = u(gen);
  const auto s = scores_of(make_ids("p", 7774), v);
  for (std::size_t n : {1000u, 5000u}) {
    const auto r = select_subsets(s, n, 9);
    CHECK(r.high_ids.size() == n);
    CHECK(r.low_ids.size() == n);
    CHECK(as_set(r.random_ids).size() == n);
    CHECK(r.score_summary.high >= r.score_summary.random);
    CHECK(r.score_summary.random >= r.score_summary.low);
  }
}

TEST_CASE("random subset is seeded and order independent") {
  const auto ids = make_ids("x", 50);
  std::vector<double> v(50);
  for (std::size_t i = 0; i < 50; ++i) v[i] = std::sin(static_cast<double>(i));
  const auto a = select_subsets(scores_of(ids, v), 10, 77);
  const auto b = select_subsets(scores_of(ids, v), 10, 77);
  CHECK(a.random_ids == b.random_ids);
  CHECK(as_set(select_subsets(scores_of(ids, v), 10, 78).random_ids) != as_set(a.random_ids));

  auto rids = ids;
  auto rv = v;
  std::reverse(rids.begin(), rids.end());
  std::reverse(rv.begin(), rv.end());
  const auto c = select_subsets(scores_of(rids, rv), 10, 77);
  CHECK(as_set(c.random_ids) == as_set(a.random_ids));
  CHECK(as_set(c.high_ids) == as_set(a.high_ids));
}

TEST_CASE("per-query selection for a single downstream example") {
  // cosines to d=[1,0]: a=0.9, b=0.5, c=0.1
  auto unit = [](double c) { return std::vector<double>{c, std::sqrt(1 - c * c)}; };
  const auto align = to_matrix({unit(0.9), unit(0.5), unit(0.1)}, {"a", "b", "c"});
  const auto down = to_matrix({{1, 0}}, {"d"});
  const auto r = select_per_query(align, down, 2, 0);
  CHECK(as_set(r.high_ids) == std::set<std::string>{"a", "b"});
  CHECK(as_set(r.low_ids) == std::set<std::string>{"b", "c"});
  CHECK(r.random_ids.size() == 2);

  const auto all = select_per_query(align, down, 3, 0);
  CHECK(as_set(all.high_ids) == std::set<std::string>{"a", "b", "c"});
  CHECK(as_set(all.low_ids) == std::set<std::string>{"a", "b", "c"});
  CHECK_THROWS_AS(select_per_query(align, down, 4, 0), ValidationError);
  CHECK_THROWS_AS(select_per_query(align, down, 0, 0), ValidationError);
}

TEST_CASE("5 downstream x 20 alignment, k=3, matches the exhaustive per-query oracle") {
  std::mt19937_64 gen(5);
  const auto ar = oracle::gaussian_rows(gen, 20, 6), dr = oracle::gaussian_rows(gen, 5, 6);
  const auto ids = make_ids("a", 20);
  const auto r = select_per_query(to_matrix(ar, ids), to_matrix(dr, make_ids("d", 5)), 3, 1);
  const auto [high, low] = oracle::per_query(ar, dr, ids, 3);
  CHECK(as_set(r.high_ids) == high);
  CHECK(as_set(r.low_ids) == low);
  CHECK(r.random_ids.size() == high.size());
}

TEST_CASE("mode names") {
  CHECK(parse_selection_mode("averaged") == SelectionMode::averaged);
  CHECK(parse_selection_mode("per_query") == SelectionMode::per_query);
  CHECK_THROWS_AS(parse_selection_mode("topk"), ValidationError);
}
