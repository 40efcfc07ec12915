#include "guardsim/risk.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <unordered_set>

#include "guardsim/digest.hpp"
#include "guardsim/error.hpp"
#include "guardsim/parallel.hpp"
#include "guardsim/similarity.hpp"

namespace guardsim {
namespace {

const std::string kModule = "risk";

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string_view to_string(RiskFlag f) { return f == RiskFlag::lower_risk ? "lower_risk" : "higher_risk"; }

double aggregate_similarity(const EmbeddingMatrix& align, const EmbeddingMatrix& down) {
  const auto scores = score_alignment(align, down);
  double sum = 0.0;
  for (double s : scores.scores) sum += s;
  return sum / static_cast<double>(scores.scores.size());
}

RiskReport rank_models(const std::vector<CandidateModel>& candidates, const EmbeddingMatrix& user_data,
                       const RiskOptions& options) {
  if (candidates.empty()) throw ValidationError(kModule, "no candidate models");
  RiskReport report;
  report.user_dataset = user_data.corpus_name;
  report.user_digest = user_data.digest;
  report.spec_digest = user_data.spec.digest();

  std::unordered_set<std::string> seen;
  std::vector<const CandidateModel*> included;
  for (const auto& c : candidates) {
    if (!seen.insert(c.model_id).second) throw ValidationError(kModule, "duplicate model_id '" + c.model_id + "'");
    if (c.alignment.dim != user_data.dim) {
      const auto reason = "dim " + std::to_string(c.alignment.dim) + " differs from user data dim " +
                          std::to_string(user_data.dim);
      if (options.strict) throw ValidationError(kModule, "candidate '" + c.model_id + "': " + reason);
      report.excluded.emplace_back(c.model_id, reason);
      continue;
    }
    if (c.alignment.spec.digest() != report.spec_digest) {
      if (!options.allow_mixed_specs)
        throw ValidationError(kModule, "candidate '" + c.model_id +
                                           "' was embedded under a different spec than the user data; "
                                           "cosines across representation spaces are not comparable");
      report.caveats.push_back("candidate '" + c.model_id + "' uses embedding spec " + c.alignment.spec.digest() +
                               "; comparison forced across representation spaces");
    }
    included.push_back(&c);
  }
  if (included.empty()) throw ValidationError(kModule, "every candidate was excluded");

  std::vector<double> aggregates(included.size());
  parallel_for(included.size(), [&](std::size_t i) {
    aggregates[i] = aggregate_similarity(included[i]->alignment, user_data);
  }, 1);

  if (options.threshold) {
    report.threshold = *options.threshold;
    report.threshold_mode = "absolute";
  } else {
    report.threshold = median(aggregates);
    report.threshold_mode = "median";
  }

  for (std::size_t i = 0; i < included.size(); ++i) {
    const auto& c = *included[i];
    report.entries.push_back({c.model_id, aggregates[i], 0,
                              aggregates[i] < report.threshold ? RiskFlag::lower_risk : RiskFlag::higher_risk,
                              c.alignment.digest, c.alignment.spec.digest()});
  }
  std::sort(report.entries.begin(), report.entries.end(), [](const RiskEntry& a, const RiskEntry& b) {
    if (a.aggregate_similarity != b.aggregate_similarity) return a.aggregate_similarity < b.aggregate_similarity;
    return a.model_id < b.model_id;
  });
  for (std::size_t i = 0; i < report.entries.size(); ++i) report.entries[i].rank = i + 1;
  report.caveats.insert(report.caveats.begin(),
                        "similarities are only comparable when every matrix comes from the same embedding spec");

  nlohmann::ordered_json config;
  config["user_digest"] = report.user_digest;
  config["threshold_mode"] = report.threshold_mode;
  config["threshold"] = options.threshold ? nlohmann::ordered_json(*options.threshold) : nlohmann::ordered_json(nullptr);
  config["strict"] = options.strict;
  config["allow_mixed_specs"] = options.allow_mixed_specs;
  std::vector<std::pair<std::string, std::string>> cand;
  for (const auto& c : candidates) cand.emplace_back(c.model_id, c.alignment.digest);
  std::sort(cand.begin(), cand.end());
  config["candidates"] = nlohmann::ordered_json::array();
  for (const auto& [id, digest] : cand) config["candidates"].push_back({{"model_id", id}, {"matrix_digest", digest}});
  report.config_digest = sha256_hex(config.dump());
  report.generated_at = utc_timestamp();
  return report;
}

std::vector<CandidateModel> load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError(kModule, "no such file '" + path.string() + "'");
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(read_file_bytes(path, kModule));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(kModule, path.string() + ": malformed JSON (" + e.what() + ")");
  }
  const auto& list = doc.is_object() && doc.contains("candidates") ? doc["candidates"] : doc;
  if (!list.is_array()) throw ValidationError(kModule, path.string() + ": expected a 'candidates' array");
  std::vector<CandidateModel> out;
  for (const auto& entry : list) {
    if (!entry.is_object() || !entry.contains("model_id") || !entry.contains("matrix") ||
        !entry["model_id"].is_string() || !entry["matrix"].is_string())
      throw ValidationError(kModule, path.string() + ": each candidate needs string 'model_id' and 'matrix'");
    std::filesystem::path matrix = entry["matrix"].get<std::string>();
    if (matrix.is_relative()) matrix = path.parent_path() / matrix;
    CandidateModel c{entry["model_id"].get<std::string>(), read_matrix(matrix), matrix.string(),
                     entry.value("metadata", nlohmann::ordered_json::object())};
    out.push_back(std::move(c));
  }
  return out;
}

std::string risk_csv(const RiskReport& report) {
  std::string out = "model_id,aggregate_similarity,rank,flag\n";
  for (const auto& e : report.entries) {
    char num[32];
    std::snprintf(num, sizeof num, "%.17g", e.aggregate_similarity);
    std::string id = e.model_id;
    if (id.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : id) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      id = quoted + "\"";
    }
    out += id + "," + num + "," + std::to_string(e.rank) + "," + std::string(to_string(e.flag)) + "\n";
  }
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace guardsim
