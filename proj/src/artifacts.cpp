#include "guardsim/artifacts.hpp"

#include "guardsim/digest.hpp"
#include "guardsim/error.hpp"

namespace guardsim {
namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

template <class T>
T required(const Json& j, const char* key, const std::string& module) {
  if (!j.contains(key)) throw ValidationError(module, std::string("artifact lacks '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(module, std::string("artifact field '") + key + "': " + e.what());
  }
}

}  // namespace

Json provenance(const Json& config, const std::vector<std::pair<std::string, std::string>>& input_digests) {
  Json inputs = Json::object();
  for (const auto& [label, digest] : input_digests) inputs[label] = digest;
  return Json{{"config", config}, {"inputs", inputs}};
}

Json to_json(const SimilarityScores& s) {
  Json j;
  j["kind"] = "similarity_scores";
  j["mode"] = to_string(s.mode);
  j["alignment_name"] = s.alignment_name;
  j["downstream_name"] = s.downstream_name;
  j["alignment_digest"] = s.alignment_digest;
  j["downstream_digest"] = s.downstream_digest;
  j["count"] = s.scores.size();
  if (!s.scores.empty()) {
    double lo = s.scores.front(), hi = s.scores.front(), sum = 0.0;
    for (double v : s.scores) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    j["summary"] = {{"min", lo}, {"max", hi}, {"mean", sum / static_cast<double>(s.scores.size())}};
  }
  j["alignment_ids"] = s.alignment_ids;
  j["scores"] = s.scores;
  return j;
}

SimilarityScores scores_from_json(const Json& j) {
  const std::string m = "similarity";
  SimilarityScores s;
  s.mode = parse_selection_mode(required<std::string>(j, "mode", m));
  s.alignment_name = required<std::string>(j, "alignment_name", m);
  s.downstream_name = required<std::string>(j, "downstream_name", m);
  s.alignment_digest = required<std::string>(j, "alignment_digest", m);
  s.downstream_digest = required<std::string>(j, "downstream_digest", m);
  s.alignment_ids = required<std::vector<std::string>>(j, "alignment_ids", m);
  s.scores = required<std::vector<double>>(j, "scores", m);
  if (s.scores.size() != s.alignment_ids.size()) throw ValidationError(m, "scores and ids differ in length");
  for (double v : s.scores)
    if (!(v >= -1.0 && v <= 1.0)) throw ValidationError(m, "score outside [-1, 1]");
  return s;
}

Json to_json(const SelectionResult& r) {
  Json j;
  j["kind"] = "selection";
  j["mode"] = to_string(r.mode);
  j["n"] = r.n;
  j["seed"] = r.seed;
  j["sizes"] = {{"high", r.high_ids.size()}, {"low", r.low_ids.size()}, {"random", r.random_ids.size()}};
  j["score_summary"] = {{"high", r.score_summary.high}, {"random", r.score_summary.random}, {"low", r.score_summary.low}};
  j["high_ids"] = r.high_ids;
  j["low_ids"] = r.low_ids;
  j["random_ids"] = r.random_ids;
  return j;
}

SelectionResult selection_from_json(const Json& j) {
  const std::string m = "similarity";
  SelectionResult r;
  r.mode = parse_selection_mode(required<std::string>(j, "mode", m));
  r.n = required<std::size_t>(j, "n", m);
  r.seed = required<std::uint64_t>(j, "seed", m);
  r.high_ids = required<std::vector<std::string>>(j, "high_ids", m);
  r.low_ids = required<std::vector<std::string>>(j, "low_ids", m);
  r.random_ids = required<std::vector<std::string>>(j, "random_ids", m);
  const auto& s = j.at("score_summary");
  r.score_summary = {s.at("high").get<double>(), s.at("random").get<double>(), s.at("low").get<double>()};
  return r;
}

Json to_json(const ClusterModel& cm) {
  Json j;
  j["kind"] = "cluster_model";
  j["k"] = cm.k;
  j["dim"] = cm.dim;
  j["seed"] = cm.seed;
  j["iterations_run"] = cm.iterations_run;
  j["converged"] = cm.converged;
  j["inertia"] = cm.inertia;
  j["inertia_trace"] = cm.inertia_trace;
  j["matrix_digest"] = cm.matrix_digest;
  Json centroids = Json::array();
  for (std::size_t c = 0; c < cm.k; ++c) {
    auto row = cm.centroid(c);
    centroids.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["centroids"] = std::move(centroids);
  j["ids"] = cm.ids;
  j["assignments"] = cm.assignments;
  return j;
}

ClusterModel cluster_model_from_json(const Json& j) {
  const std::string m = "clustering";
  ClusterModel cm;
  cm.k = required<std::size_t>(j, "k", m);
  cm.dim = required<std::size_t>(j, "dim", m);
  cm.seed = required<std::uint64_t>(j, "seed", m);
  cm.iterations_run = required<std::size_t>(j, "iterations_run", m);
  cm.converged = required<bool>(j, "converged", m);
  cm.inertia = required<double>(j, "inertia", m);
  cm.inertia_trace = required<std::vector<double>>(j, "inertia_trace", m);
  cm.matrix_digest = required<std::string>(j, "matrix_digest", m);
  const auto centroids = required<std::vector<std::vector<double>>>(j, "centroids", m);
  if (centroids.size() != cm.k) throw ValidationError(m, "centroid count disagrees with k");
  for (const auto& row : centroids) {
    if (row.size() != cm.dim) throw ValidationError(m, "centroid length disagrees with dim");
    cm.centroids.insert(cm.centroids.end(), row.begin(), row.end());
  }
  cm.ids = required<std::vector<std::string>>(j, "ids", m);
  cm.assignments = required<std::vector<std::size_t>>(j, "assignments", m);
  if (cm.assignments.size() != cm.ids.size()) throw ValidationError(m, "assignments and ids differ in length");
  for (auto a : cm.assignments)
    if (a >= cm.k) throw ValidationError(m, "assignment outside [0, k)");
  return cm;
}

Json to_json(const std::vector<ClusterReport>& reports) {
  Json arr = Json::array();
  for (const auto& r : reports) {
    arr.push_back({{"cluster", r.cluster},
                   {"size", r.size},
                   {"intra_similarity", optional_number(r.intra_similarity)},
                   {"sample_ids", r.sample_ids}});
  }
  return arr;
}

Json to_json(const ContaminationReport& r) {
  Json j;
  j["kind"] = "contamination_report";
  j["corpus_name"] = r.corpus_name;
  j["corpus_digest"] = r.corpus_digest;
  j["ks"] = r.ks;
  Json means = Json::array();
  for (std::size_t i = 0; i < r.ks.size(); ++i) means.push_back({{"k_percent", r.ks[i]}, {"mean_min_k_logprob", r.corpus_means[i]}});
  j["corpus_means"] = std::move(means);
  Json rows = Json::array();
  for (const auto& row : r.rows) rows.push_back({{"id", row.example_id}, {"min_k_logprob", row.values}});
  j["examples"] = std::move(rows);
  return j;
}

Json to_json(const MetricReport& r) {
  Json j;
  j["kind"] = "metric_report";
  j["flagged"] = r.flagged;
  j["total"] = r.total;
  j["hs"] = r.hs;
  j["hs_percent"] = r.total > 0 ? Json(r.hs_percent()) : Json(nullptr);
  j["utility"] = optional_number(r.utility);
  return j;
}

Json to_json(const std::vector<ModerationVerdict>& verdicts) {
  Json arr = Json::array();
  for (const auto& v : verdicts) arr.push_back({{"id", v.example_id}, {"flagged", v.flagged}, {"categories", v.categories}});
  return arr;
}

Json to_json(const JudgeReport& r) {
  Json j;
  j["kind"] = "judge_report";
  j["mean"] = r.mean;
  Json items = Json::array();
  for (std::size_t i = 0; i < r.ids.size(); ++i) items.push_back({{"id", r.ids[i]}, {"score", r.scores[i]}});
  j["items"] = std::move(items);
  return j;
}

Json to_json(const RiskReport& r) {
  Json j;
  j["kind"] = "risk_report";
  j["user_dataset"] = r.user_dataset;
  j["user_digest"] = r.user_digest;
  j["spec_digest"] = r.spec_digest;
  j["threshold"] = r.threshold;
  j["threshold_mode"] = r.threshold_mode;
  j["generated_at"] = r.generated_at;
  j["config_digest"] = r.config_digest;
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"rank", e.rank},
                       {"model_id", e.model_id},
                       {"aggregate_similarity", e.aggregate_similarity},
                       {"flag", to_string(e.flag)},
                       {"matrix_digest", e.matrix_digest},
                       {"spec_digest", e.spec_digest}});
  }
  j["entries"] = std::move(entries);
  Json excluded = Json::array();
  for (const auto& [id, reason] : r.excluded) excluded.push_back({{"model_id", id}, {"reason", reason}});
  j["excluded"] = std::move(excluded);
  j["caveats"] = r.caveats;
  return j;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  write_file_bytes(path, j.dump(2) + "\n", "artifacts");
}

Json read_json(const std::filesystem::path& path, const std::string& module) {
  if (!std::filesystem::exists(path)) throw IoError(module, "no such file '" + path.string() + "'");
  try {
    return Json::parse(read_file_bytes(path, module));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(module, path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

}  // namespace guardsim
