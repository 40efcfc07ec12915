#include <doctest.h>

#include <algorithm>

#include "guardsim/artifacts.hpp"
#include "guardsim/error.hpp"
#include "guardsim/risk.hpp"
#include "test_support.hpp"

using namespace guardsim;
using testsupport::make_ids;
using testsupport::to_matrix;

namespace {

/// Candidate whose single alignment row has cosine `c` with the user vector [1, 0].
CandidateModel with_cosine(const std::string& id, double c) {
  return {id, to_matrix({{c, std::sqrt(1 - c * c)}}, {id + "-0"}), "", nlohmann::ordered_json::object()};
}

}  // namespace

TEST_CASE("aggregate similarity") {
  const auto e = to_matrix({{0.2, 0.7}}, {"e"});
  CHECK(aggregate_similarity(e, e) == doctest::Approx(1.0).epsilon(1e-12));
  const auto a = to_matrix({{1, 0}, {0, 1}}, {"x", "y"});
  CHECK(aggregate_similarity(a, to_matrix({{1, 0}}, {"d"})) == doctest::Approx(0.5).epsilon(1e-15));

  std::mt19937_64 gen(10);
  const auto ar = oracle::gaussian_rows(gen, 10, 8), dr = oracle::gaussian_rows(gen, 7, 8);
  double grand = 0;
  for (const auto& x : ar)
    for (const auto& y : dr) grand += oracle::cos_pair(x, y);
  grand /= 70;
  CHECK(std::abs(aggregate_similarity(to_matrix(ar, make_ids("a", 10)), to_matrix(dr, make_ids("d", 7))) - grand) <
        1e-9);
  CHECK_THROWS_AS(aggregate_similarity(to_matrix({{1, 0, 0}}, {"z"}), e), ValidationError);
}

TEST_CASE("ordering and thresholding") {
  const auto user = to_matrix({{1, 0}}, {"u"});
  RiskOptions opts;
  opts.threshold = 0.6;
  const auto r = rank_models({with_cosine("A", 0.82), with_cosine("B", 0.41)}, user, opts);
  REQUIRE(r.entries.size() == 2);
  CHECK(r.entries[0].model_id == "B");
  CHECK(r.entries[0].rank == 1);
  CHECK(r.entries[0].flag == RiskFlag::lower_risk);
  CHECK(r.entries[1].model_id == "A");
  CHECK(r.entries[1].rank == 2);
  CHECK(r.entries[1].flag == RiskFlag::higher_risk);
  CHECK(r.threshold_mode == "absolute");
  CHECK(r.entries[0].aggregate_similarity == doctest::Approx(0.41).epsilon(1e-6));
}

TEST_CASE("single candidate is rank 1") {
  const auto r = rank_models({with_cosine("solo", -0.3)}, to_matrix({{1, 0}}, {"u"}), {});
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].rank == 1);
}

TEST_CASE("ties break by model id and the median splits the pool") {
  const auto user = to_matrix({{1, 0}}, {"u"});
  const auto r = rank_models({with_cosine("z", 0.5), with_cosine("a", 0.5), with_cosine("m", 0.1), with_cosine("q", 0.9)},
                             user, {});
  std::vector<std::string> order;
  for (const auto& e : r.entries) order.push_back(e.model_id);
  CHECK(order == std::vector<std::string>{"m", "a", "z", "q"});
  CHECK(r.threshold_mode == "median");
  CHECK(r.entries[0].flag == RiskFlag::lower_risk);
  CHECK(r.entries[3].flag == RiskFlag::higher_risk);
  for (const auto& e : r.entries) CHECK((e.flag == RiskFlag::lower_risk) == (e.aggregate_similarity < r.threshold));
}

TEST_CASE("scaling every embedding leaves ordering and flags unchanged") {
  std::mt19937_64 gen(30);
  const auto user_rows = oracle::gaussian_rows(gen, 12, 5);
  std::vector<oracle::Rows> cand_rows;
  for (int c = 0; c < 5; ++c) cand_rows.push_back(oracle::gaussian_rows(gen, 9, 5));
  auto run = [&](double scale) {
    std::vector<CandidateModel> cands;
    for (int c = 0; c < 5; ++c)
      cands.push_back({"m" + std::to_string(c), to_matrix(cand_rows[c], make_ids("c", 9), "c", scale), "", {}});
    const auto r = rank_models(cands, to_matrix(user_rows, make_ids("u", 12), "u", scale), {});
    std::vector<std::pair<std::string, RiskFlag>> out;
    for (const auto& e : r.entries) out.emplace_back(e.model_id, e.flag);
    return out;
  };
  CHECK(run(1.0) == run(3.0));
}

TEST_CASE("dim mismatch is fatal in strict mode and excluded otherwise") {
  const auto user = to_matrix({{1, 0}}, {"u"});
  std::vector<CandidateModel> cands{with_cosine("ok", 0.3),
                                    {"wide", to_matrix({{1, 0, 0}}, {"w"}), "", nlohmann::ordered_json::object()}};
  RiskOptions strict;
  strict.strict = true;
  CHECK_THROWS_WITH_AS(rank_models(cands, user, strict), doctest::Contains("wide"), ValidationError);
  RiskOptions lenient;
  lenient.strict = false;
  const auto r = rank_models(cands, user, lenient);
  CHECK(r.entries.size() == 1);
  REQUIRE(r.excluded.size() == 1);
  CHECK(r.excluded[0].first == "wide");
}

TEST_CASE("mixed embedding specs are refused unless forced") {
  const auto user = to_matrix({{1, 0}}, {"u"});
  std::vector<CandidateModel> cands{with_cosine("a", 0.3),
                                    {"b", to_matrix({{0.6, 0.8}}, {"b0"}, "b", 1.0, "other-model"), "", {}}};
  CHECK_THROWS_AS(rank_models(cands, user, {}), ValidationError);
  RiskOptions force;
  force.allow_mixed_specs = true;
  const auto r = rank_models(cands, user, force);
  CHECK(r.entries.size() == 2);
  CHECK(std::any_of(r.caveats.begin(), r.caveats.end(),
                    [](const std::string& c) { return c.find("'b'") != std::string::npos; }));
}

TEST_CASE("manifest paths resolve against the manifest directory") {
  testsupport::TempDir dir;
  std::filesystem::create_directories(dir / "models");
  write_matrix(with_cosine("a", 0.2).alignment, dir / "models/a.emb");
  write_matrix(with_cosine("b", 0.7).alignment, dir / "models/b.emb");
  testsupport::write_text(dir / "models/manifest.json",
                          R"({"candidates":[{"model_id":"a","matrix":"a.emb"},{"model_id":"b","matrix":"b.emb","metadata":{"size":"7B"}}]})");
  const auto cands = load_manifest(dir / "models/manifest.json");
  REQUIRE(cands.size() == 2);
  CHECK(cands[1].metadata["size"] == "7B");
  const auto report = rank_models(cands, to_matrix({{1, 0}}, {"u"}), {});
  const auto csv = risk_csv(report);
  CHECK(csv.rfind("model_id,aggregate_similarity,rank,flag\n", 0) == 0);
  CHECK(csv.find("a,") != std::string::npos);
  const auto j = to_json(report);
  CHECK(j["entries"].size() == 2);
  testsupport::write_text(dir / "models/broken.json", R"({"candidates":[{"model_id":"x","matrix":"missing.emb"}]})");
  CHECK_THROWS_AS(load_manifest(dir / "models/broken.json"), IoError);
}
