#include "guardsim/service.hpp"

#include <httplib.h>

#include <thread>

#include "guardsim/error.hpp"

namespace guardsim {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

SplitUrl split_url(const std::string& url, const std::string& module) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ServiceError(module, "endpoint '" + url + "' lacks a scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) out.prefix = url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

nlohmann::json post_json(const ServiceEndpoint& endpoint, std::string_view path, const nlohmann::json& body,
                         const RetryPolicy& retry, const std::string& module) {
  if (endpoint.base_url.empty()) throw ServiceError(module, "no service endpoint configured");
  const auto url = split_url(endpoint.base_url, module);
  const std::string target = url.prefix + std::string(path);
  const std::string payload = body.dump();

  httplib::Client client(url.origin);
  client.set_connection_timeout(retry.timeout);
  client.set_read_timeout(retry.timeout);
  client.set_write_timeout(retry.timeout);
  if (!endpoint.token.empty()) client.set_bearer_token_auth(endpoint.token);

  std::string last_error;
  const int attempts = std::max(1, retry.max_attempts);
  int attempt = 1;
  for (; attempt <= attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(retry.backoff * (1 << (attempt - 2)));
    auto res = client.Post(target, payload, "application/json");
    if (!res) {
      last_error = "transport failure (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error&) {
        throw ServiceError(module, "POST " + target + " returned a non-JSON body");
      }
    }
    last_error = "HTTP " + std::to_string(res->status);
    if (!retryable(res->status)) break;
  }
  throw ServiceError(module, "POST " + endpoint.base_url + std::string(path) + " failed: " + last_error + " (" +
                                 std::to_string(std::min(attempt, attempts)) + " attempt(s))");
}

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t total, std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (batch == 0) return out;
  for (std::size_t b = 0; b < total; b += batch) out.emplace_back(b, std::min(total, b + batch));
  return out;
}

}  // namespace guardsim
