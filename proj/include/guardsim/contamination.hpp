#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "guardsim/corpus.hpp"
#include "guardsim/service.hpp"

namespace guardsim {

/// Per-token natural-log probabilities of one example under a reference model.
struct TokenLogProbs {
  std::string example_id;
  std::vector<double> logprobs;

  /// Non-empty, every value <= 0 and finite.
  void validate() const;
};

/// Number of tokens averaged by Min-K% Prob: max(1, floor(k_percent * len / 100)).
std::size_t min_k_count(std::size_t len, double k_percent);

/// Mean of the min_k_count smallest log-probabilities.
double min_k_prob(std::span<const double> logprobs, double k_percent);
double min_k_prob(const TokenLogProbs& t, double k_percent);

/// Reads line-delimited {"id": ..., "logprobs": [...]} records.
std::vector<TokenLogProbs> load_logprobs(const std::filesystem::path& path);

/// Requests per-token log-probabilities from POST {endpoint}/logprobs for
/// each example's rendered text ("{instruction}{input}\n{output}").
std::vector<TokenLogProbs> fetch_logprobs(const Corpus& corpus, const ServiceEndpoint& endpoint,
                                          const ClientOptions& options);

struct ContaminationRow {
  std::string example_id;
  std::vector<double> values;  // one per threshold, same order as ks
};

/// Min-K% Prob per (example, threshold) plus the corpus mean per threshold.
struct ContaminationReport {
  std::string corpus_name;
  std::string corpus_digest;
  std::vector<double> ks;
  std::vector<ContaminationRow> rows;  // corpus order
  std::vector<double> corpus_means;    // one per threshold
};

/// Requires one record per corpus id; extra records are ignored.
ContaminationReport contamination_report(const Corpus& corpus, const std::vector<TokenLogProbs>& logprobs,
                                         const std::vector<double>& ks);

}  // namespace guardsim
