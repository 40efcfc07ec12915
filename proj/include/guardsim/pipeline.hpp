#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "guardsim/artifacts.hpp"
#include "guardsim/embeddings.hpp"
#include "guardsim/service.hpp"
#include "guardsim/similarity.hpp"

namespace guardsim {

/// Fully resolved inputs for one end-to-end run.
///
/// Each side (alignment, downstream) is given either as an EMB1 file or as
/// a corpus plus an embedding endpoint; when both a corpus and a matrix are
/// given their ids must agree.
struct PipelineConfig {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> align_emb;
  std::optional<std::filesystem::path> down_emb;
  std::optional<std::filesystem::path> align_corpus;
  std::optional<std::filesystem::path> down_corpus;
  std::string align_name = "alignment";
  std::string down_name = "downstream";
  std::optional<ServiceEndpoint> embed_endpoint;
  EmbeddingSpec spec;
  ClientOptions client;

  std::size_t n = 1000;
  std::uint64_t seed = 0;
  SelectionMode mode = SelectionMode::averaged;

  std::optional<std::size_t> cluster_k;
  std::size_t max_iter = 100;
  double tol = 1e-6;

  /// JSONL file, or an http(s) URL of a log-probability service.
  std::optional<std::string> logprobs;
  std::vector<double> ks{5.0, 10.0, 20.0};

  std::optional<std::filesystem::path> candidates;
  std::optional<double> risk_threshold;

  bool strict = false;

  /// Resolved config as embedded in every artifact. Tokens are never included.
  Json to_json() const;
};

struct PipelineResult {
  SimilarityScores scores;
  SelectionResult selection;
  std::vector<std::filesystem::path> artifacts;
  std::vector<std::string> warnings;
};

/// embed (when needed) -> score -> select, then optional clustering,
/// contamination and risk ranking. Writes JSON artifacts into out_dir:
/// scores.json, selection.json, run.json, and when requested
/// alignment.emb / downstream.emb, {high,low,random}.jsonl, clusters.json,
/// contamination.json, risk.json, risk.csv.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace guardsim
