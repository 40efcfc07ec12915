#include "guardsim/contamination.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "guardsim/digest.hpp"
#include "guardsim/embeddings.hpp"
#include "guardsim/error.hpp"
#include "guardsim/parallel.hpp"

namespace guardsim {
namespace {

const std::string kModule = "contamination";

void check_k(double k_percent) {
  if (!(k_percent > 0.0 && k_percent <= 100.0))
    throw ValidationError(kModule, "k_percent must lie in (0, 100], got " + std::to_string(k_percent));
}

std::vector<double> parse_logprob_array(const nlohmann::json& arr, const std::string& where) {
  if (!arr.is_array()) throw ValidationError(kModule, where + ": 'logprobs' is not an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) throw ValidationError(kModule, where + ": non-numeric log-probability");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

void TokenLogProbs::validate() const {
  if (logprobs.empty()) throw ValidationError(kModule, "example '" + example_id + "' has no log-probabilities");
  for (double v : logprobs) {
    if (!std::isfinite(v) || v > 0.0)
      throw ValidationError(kModule, "example '" + example_id + "' has log-probability " + std::to_string(v) +
                                         " (must be finite and <= 0)");
  }
}

std::size_t min_k_count(std::size_t len, double k_percent) {
  check_k(k_percent);
  const auto m = static_cast<std::size_t>(std::floor(k_percent * static_cast<double>(len) / 100.0));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(1, len));
}

double min_k_prob(std::span<const double> logprobs, double k_percent) {
  if (logprobs.empty()) throw ValidationError(kModule, "empty log-probability sequence");
  const auto m = min_k_count(logprobs.size(), k_percent);
  std::vector<double> sorted(logprobs.begin(), logprobs.end());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m), sorted.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) sum += sorted[i];
  return sum / static_cast<double>(m);
}

double min_k_prob(const TokenLogProbs& t, double k_percent) {
  t.validate();
  return min_k_prob(t.logprobs, k_percent);
}

std::vector<TokenLogProbs> load_logprobs(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError(kModule, "no such file '" + path.string() + "'");
  const auto text = read_file_bytes(path, kModule);
  std::vector<TokenLogProbs> out;
  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view raw(text.data() + pos, (nl == std::string::npos ? text.size() : nl) - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = path.string() + " line " + std::to_string(line);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
      throw ValidationError(kModule, where + ": malformed JSON");
    }
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() || !rec.contains("logprobs"))
      throw ValidationError(kModule, where + ": record needs string 'id' and 'logprobs'");
    TokenLogProbs t{rec["id"].get<std::string>(), parse_logprob_array(rec["logprobs"], where)};
    t.validate();
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<TokenLogProbs> fetch_logprobs(const Corpus& corpus, const ServiceEndpoint& endpoint,
                                          const ClientOptions& options) {
  if (options.batch == 0) throw ValidationError(kModule, "batch size must be >= 1");
  const EmbeddingSpec text_spec;
  const auto ranges = batch_ranges(corpus.size(), options.batch);
  auto batches = run_bounded<std::vector<TokenLogProbs>>(ranges.size(), options.max_in_flight, [&](std::size_t b) {
    const auto [begin, end] = ranges[b];
    nlohmann::json body;
    body["texts"] = nlohmann::json::array();
    for (std::size_t i = begin; i < end; ++i) body["texts"].push_back(text_spec.render(corpus.examples[i]));
    const auto reply = post_json(endpoint, "/logprobs", body, options.retry, kModule);
    const auto it = reply.find("logprobs");
    if (it == reply.end() || !it->is_array() || it->size() != end - begin)
      throw ServiceError(kModule, "/logprobs reply must hold one sequence per text");
    std::vector<TokenLogProbs> out;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& id = corpus.examples[i].id;
      try {
        TokenLogProbs t{id, parse_logprob_array((*it)[i - begin], "/logprobs reply")};
        t.validate();
        out.push_back(std::move(t));
      } catch (const ValidationError& e) {
        throw ServiceError(kModule, e.what());
      }
    }
    return out;
  });
  std::vector<TokenLogProbs> all;
  for (auto& b : batches) std::move(b.begin(), b.end(), std::back_inserter(all));
  return all;
}

ContaminationReport contamination_report(const Corpus& corpus, const std::vector<TokenLogProbs>& logprobs,
                                         const std::vector<double>& ks) {
  if (ks.empty()) throw ValidationError(kModule, "at least one threshold is required");
  for (double k : ks) check_k(k);

  std::unordered_map<std::string_view, const TokenLogProbs*> by_id;
  for (const auto& t : logprobs) {
    if (!by_id.emplace(t.example_id, &t).second)
      throw ValidationError(kModule, "duplicate log-probability record for '" + t.example_id + "'");
  }
  std::vector<std::string> missing;
  std::vector<const TokenLogProbs*> matched;
  for (const auto& ex : corpus.examples) {
    auto it = by_id.find(ex.id);
    if (it == by_id.end()) {
      missing.push_back(ex.id);
    } else {
      matched.push_back(it->second);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 10) list += ", ...";
    throw ValidationError(kModule, std::to_string(missing.size()) + " example(s) lack log-probabilities: " + list);
  }

  ContaminationReport report;
  report.corpus_name = corpus.name;
  report.corpus_digest = corpus.source_digest;
  report.ks = ks;
  report.rows.resize(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    report.rows[i].example_id = corpus.examples[i].id;
    for (double k : ks) report.rows[i].values.push_back(min_k_prob(*matched[i], k));
  });
  report.corpus_means.assign(ks.size(), 0.0);
  for (const auto& row : report.rows)
    for (std::size_t j = 0; j < ks.size(); ++j) report.corpus_means[j] += row.values[j];
  for (auto& mean : report.corpus_means) mean /= static_cast<double>(report.rows.size());
  return report;
}

}  // namespace guardsim
