#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "guardsim/embeddings.hpp"

namespace guardsim {

/// A safety-aligned model, represented by the embeddings of its alignment corpus.
struct CandidateModel {
  std::string model_id;
  EmbeddingMatrix alignment;
  std::string matrix_path;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

enum class RiskFlag { lower_risk, higher_risk };
std::string_view to_string(RiskFlag f);

struct RiskEntry {
  std::string model_id;
  double aggregate_similarity = 0.0;
  std::size_t rank = 0;  // 1-based, ascending similarity
  RiskFlag flag = RiskFlag::higher_risk;
  std::string matrix_digest;
  std::string spec_digest;
};

struct RiskOptions {
  /// Absolute threshold; when empty the median of the candidate aggregates is used.
  std::optional<double> threshold;
  /// Lenient mode excludes candidates whose dim disagrees with the user data
  /// instead of failing.
  bool strict = true;
  /// Allow candidates embedded under a different EmbeddingSpec than the user data.
  bool allow_mixed_specs = false;
};

struct RiskReport {
  std::string user_dataset;
  std::string user_digest;
  std::string spec_digest;
  std::vector<RiskEntry> entries;  // ascending aggregate similarity
  double threshold = 0.0;
  std::string threshold_mode;  // "median" or "absolute"
  std::string generated_at;    // ISO-8601 UTC
  std::string config_digest;
  std::vector<std::pair<std::string, std::string>> excluded;  // (model_id, reason)
  std::vector<std::string> caveats;
};

/// Grand mean of cosine over all (alignment row, downstream row) pairs,
/// computed as the mean of score_alignment's per-row scores.
double aggregate_similarity(const EmbeddingMatrix& align, const EmbeddingMatrix& down);

/// Ranks candidates by ascending aggregate similarity to the user data
/// (ties by model_id) and flags lower_risk iff aggregate < threshold.
RiskReport rank_models(const std::vector<CandidateModel>& candidates, const EmbeddingMatrix& user_data,
                       const RiskOptions& options);

/// Manifest: {"candidates": [{"model_id": ..., "matrix": path, "metadata": {...}}]}
/// or a bare array of the same objects. Relative matrix paths resolve against
/// the manifest's directory.
std::vector<CandidateModel> load_manifest(const std::filesystem::path& path);

/// model_id,aggregate_similarity,rank,flag rows with a header line.
std::string risk_csv(const RiskReport& report);

std::string utc_timestamp();

}  // namespace guardsim
