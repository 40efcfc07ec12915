#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <exception>
#include <future>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace guardsim {

/// Base URL of an external model service ("http://host:port[/prefix]")
/// plus an optional bearer token.
struct ServiceEndpoint {
  std::string base_url;
  std::string token;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff{100};
  std::chrono::seconds timeout{60};
};

/// Batching and concurrency knobs shared by all service clients.
struct ClientOptions {
  std::size_t batch = 16;
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
};

/// POSTs a JSON body to base_url + path. Transport failures, 5xx and 429
/// responses are retried up to retry.max_attempts; other non-2xx statuses
/// and non-JSON bodies fail immediately. All failures raise ServiceError
/// tagged with `module`.
nlohmann::json post_json(const ServiceEndpoint& endpoint, std::string_view path, const nlohmann::json& body,
                         const RetryPolicy& retry, const std::string& module);

/// Splits [0, total) into consecutive batches of at most `batch` items.
/// Returns (begin, end) pairs in order.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t total, std::size_t batch);

/// Runs task(batch_index) for every batch with at most `max_in_flight`
/// concurrent tasks; results come back in batch order.
template <class Result, class Task>
std::vector<Result> run_bounded(std::size_t n_tasks, std::size_t max_in_flight, Task&& task) {
  std::vector<Result> results(n_tasks);
  const std::size_t window = max_in_flight == 0 ? 1 : max_in_flight;
  for (std::size_t start = 0; start < n_tasks; start += window) {
    const std::size_t stop = std::min(n_tasks, start + window);
    std::vector<std::future<Result>> pending;
    pending.reserve(stop - start);
    for (std::size_t i = start; i < stop; ++i) pending.push_back(std::async(std::launch::async, task, i));
    // get() in order; every future is drained before the first error propagates
    std::exception_ptr failure;
    for (std::size_t i = start; i < stop; ++i) {
      try {
        results[i] = pending[i - start].get();
      } catch (...) {
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  return results;
}

}  // namespace guardsim
