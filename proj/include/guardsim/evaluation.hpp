#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guardsim/service.hpp"

namespace guardsim {

/// A prompt and the response a model produced for it.
struct ResponseRecord {
  std::string id;
  std::string prompt;
  std::string response;
};

/// Reads JSONL records with "prompt" (or "instruction") and "response" (or
/// "output"). Responses may be empty; ids are synthesized like corpus ids
/// when absent.
std::vector<ResponseRecord> load_responses(const std::filesystem::path& path, const std::string& name);

struct ModerationVerdict {
  std::string example_id;
  bool flagged = false;
  std::vector<std::string> categories;
};

/// Harmfulness counts plus an optional utility figure.
struct MetricReport {
  std::size_t flagged = 0;
  std::size_t total = 0;
  double hs = 0.0;  // flagged / total
  std::optional<double> utility;

  /// hs as a percentage with two decimals, e.g. "33.33%". Rounded half-up
  /// from the exact count ratio.
  std::string hs_percent() const;
};

std::string format_percent(std::size_t numerator, std::size_t denominator);

MetricReport harmfulness_score(const std::vector<ModerationVerdict>& verdicts);

struct ModerationOutcome {
  std::vector<ModerationVerdict> verdicts;  // successful items, source order
  std::vector<std::string> failed_ids;
  std::vector<std::string> warnings;
};

/// Sends {"items":[{"prompt","response"}]} batches to POST {endpoint}/moderate.
/// An item whose verdict lacks a boolean "flagged" (for example
/// {"error": ...}) counts as rejected, as does every item of a batch whose
/// request still fails after retries. Strict mode raises ServiceError
/// listing the rejected ids; lenient mode drops them and records a warning.
/// A reply with the wrong number of verdicts always fails.
ModerationOutcome moderate(const std::vector<ResponseRecord>& responses, const ServiceEndpoint& endpoint,
                           const ClientOptions& options, bool strict);

/// Rouge-1 tokenization: lowercase ASCII, split on Unicode whitespace,
/// strip leading/trailing ASCII punctuation, drop empty tokens.
std::vector<std::string> rouge_tokens(std::string_view text);

/// Clipped unigram overlap F1. Throws ValidationError if either side has no
/// tokens.
double rouge1_f1(std::string_view candidate, std::string_view reference);

/// Mean Rouge-1 F1 over aligned candidate/reference lists.
double mean_rouge1_f1(const std::vector<std::string>& candidates, const std::vector<std::string>& references);

struct JudgeReport {
  std::vector<std::string> ids;
  std::vector<double> scores;  // one per response, in [1, 10]
  double mean = 0.0;
};

/// Sends {"items":[{"prompt","response"}]} batches to POST {endpoint}/judge
/// and expects {"scores":[number]}. Any score outside [1, 10] is a schema
/// error.
JudgeReport judge_utility(const std::vector<ResponseRecord>& responses, const ServiceEndpoint& endpoint,
                          const ClientOptions& options);

}  // namespace guardsim
