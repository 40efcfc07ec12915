#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace guardsim::testing {

/// Behaviour knobs for the in-process stub of the external model services.
struct StubConfig {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::size_t embed_dim = 8;
  /// When non-empty, the i-th /embed request answers with dim dims[i]
  /// (last entry repeats). Used to provoke inconsistent-dim errors.
  std::vector<std::size_t> embed_dims_by_request;
  /// The first N requests to each endpoint answer 503.
  int fail_first = 0;
  /// /moderate items whose response contains this marker get {"error": ...}.
  std::string reject_marker = "[reject]";
  /// /moderate items whose response contains this marker are flagged.
  std::string unsafe_marker = "[unsafe]";
  /// /judge returns N for responses containing "[score=N]", otherwise this.
  double default_judge_score = 7.0;
};

/// Serves POST /embed, /moderate, /judge and /logprobs with deterministic
/// answers derived from the request text. Starts listening on construction
/// and stops on destruction.
class StubService {
 public:
  explicit StubService(StubConfig config = {});
  ~StubService();
  StubService(const StubService&) = delete;
  StubService& operator=(const StubService&) = delete;

  int port() const;
  std::string url() const;

  /// Sizes of every /embed "texts" array received, in arrival order.
  std::vector<std::size_t> embed_batch_sizes() const;
  /// Requests received per path, including failed ones.
  std::map<std::string, std::size_t> request_counts() const;

  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();

  /// The vector /embed returns for a text.
  static std::vector<float> embed_text(std::string_view text, std::size_t dim);
  /// The per-token log-probabilities /logprobs returns for a text.
  static std::vector<double> logprobs_for(std::string_view text);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace guardsim::testing
