#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "guardsim/clustering.hpp"
#include "guardsim/contamination.hpp"
#include "guardsim/evaluation.hpp"
#include "guardsim/risk.hpp"
#include "guardsim/similarity.hpp"

namespace guardsim {

using Json = nlohmann::ordered_json;

/// {"config": ..., "inputs": {label: digest}} block embedded in every artifact.
Json provenance(const Json& config, const std::vector<std::pair<std::string, std::string>>& input_digests);

Json to_json(const SimilarityScores& s);
SimilarityScores scores_from_json(const Json& j);

Json to_json(const SelectionResult& r);
SelectionResult selection_from_json(const Json& j);

Json to_json(const ClusterModel& cm);
ClusterModel cluster_model_from_json(const Json& j);

Json to_json(const std::vector<ClusterReport>& reports);
Json to_json(const ContaminationReport& r);
Json to_json(const MetricReport& r);
Json to_json(const std::vector<ModerationVerdict>& verdicts);
Json to_json(const JudgeReport& r);
Json to_json(const RiskReport& r);

/// Pretty-printed with a trailing newline; byte-stable for equal input.
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path, const std::string& module);

}  // namespace guardsim
