#include "guardsim/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "guardsim/corpus.hpp"
#include "guardsim/digest.hpp"
#include "guardsim/error.hpp"

namespace guardsim {
namespace {

const std::string kModule = "evaluation";

std::string text_field(const nlohmann::json& rec, const char* primary, const char* fallback, const std::string& where) {
  for (const char* key : {primary, fallback}) {
    auto it = rec.find(key);
    if (it == rec.end()) continue;
    if (!it->is_string()) throw ValidationError(kModule, where + ": field '" + key + "' is not a string");
    return it->get<std::string>();
  }
  throw ValidationError(kModule, where + ": missing '" + primary + "' (or '" + fallback + "')");
}

nlohmann::json items_payload(const std::vector<ResponseRecord>& responses, std::size_t begin, std::size_t end) {
  nlohmann::json body;
  body["items"] = nlohmann::json::array();
  for (std::size_t i = begin; i < end; ++i)
    body["items"].push_back({{"prompt", responses[i].prompt}, {"response", responses[i].response}});
  return body;
}

std::string id_list(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? ", " : "") + ids[i];
  return out;
}

bool is_unicode_space(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\v': case U'\f': case U'\r':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

/// Decodes one UTF-8 sequence at text[i]; returns its length (1 for bytes
/// that do not start a valid sequence).
std::size_t decode_utf8(std::string_view text, std::size_t i, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  std::size_t len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 0;
  if (len == 0 || i + len > text.size()) {
    cp = 0xFFFD;
    return 1;
  }
  cp = len == 1 ? b0 : b0 & (0x7F >> len);
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b >> 6) != 0x2) {
      cp = 0xFFFD;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

std::string normalize_token(std::string token) {
  auto punct = [](char c) { return static_cast<unsigned char>(c) < 0x80 && std::ispunct(static_cast<unsigned char>(c)); };
  std::size_t b = 0, e = token.size();
  while (b < e && punct(token[b])) ++b;
  while (e > b && punct(token[e - 1])) --e;
  token = token.substr(b, e - b);
  for (auto& c : token)
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return token;
}

}  // namespace

std::vector<ResponseRecord> load_responses(const std::filesystem::path& path, const std::string& name) {
  if (!std::filesystem::exists(path)) throw IoError(kModule, "no such file '" + path.string() + "'");
  const auto text = read_file_bytes(path, kModule);
  std::vector<ResponseRecord> out;
  std::unordered_set<std::string> seen;
  std::size_t line = 0, pos = 0;
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
    if (!rec.is_object()) throw ValidationError(kModule, where + ": record is not an object");
    ResponseRecord r;
    r.prompt = text_field(rec, "prompt", "instruction", where);
    r.response = text_field(rec, "response", "output", where);
    if (auto it = rec.find("id"); it != rec.end() && it->is_string()) {
      r.id = it->get<std::string>();
    } else {
      r.id = synthesize_id(name, out.size());
    }
    if (!seen.insert(r.id).second) throw ValidationError(kModule, where + ": duplicate id '" + r.id + "'");
    out.push_back(std::move(r));
  }
  if (out.empty()) throw ValidationError(kModule, "'" + path.string() + "' has no records");
  return out;
}

std::string format_percent(std::size_t numerator, std::size_t denominator) {
  if (denominator == 0) throw ValidationError(kModule, "percentage of an empty set");
  // hundredths of a percent, rounded half-up in integer arithmetic
  const unsigned long long scaled = (static_cast<unsigned long long>(numerator) * 20000ULL + denominator) /
                                    (2ULL * denominator);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%llu.%02llu%%", scaled / 100, scaled % 100);
  return buf;
}

std::string MetricReport::hs_percent() const { return format_percent(flagged, total); }

MetricReport harmfulness_score(const std::vector<ModerationVerdict>& verdicts) {
  if (verdicts.empty()) throw ValidationError(kModule, "harmfulness score of an empty verdict list");
  MetricReport r;
  r.total = verdicts.size();
  r.flagged = static_cast<std::size_t>(std::count_if(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.flagged; }));
  r.hs = static_cast<double>(r.flagged) / static_cast<double>(r.total);
  return r;
}

ModerationOutcome moderate(const std::vector<ResponseRecord>& responses, const ServiceEndpoint& endpoint,
                           const ClientOptions& options, bool strict) {
  if (responses.empty()) throw ValidationError(kModule, "nothing to moderate");
  if (options.batch == 0) throw ValidationError(kModule, "batch size must be >= 1");

  struct Slot {
    std::optional<ModerationVerdict> verdict;
    std::string error;
  };
  const auto ranges = batch_ranges(responses.size(), options.batch);
  auto batches = run_bounded<std::vector<Slot>>(ranges.size(), options.max_in_flight, [&](std::size_t b) {
    const auto [begin, end] = ranges[b];
    std::vector<Slot> slots(end - begin);
    nlohmann::json reply;
    try {
      reply = post_json(endpoint, "/moderate", items_payload(responses, begin, end), options.retry, kModule);
    } catch (const ServiceError& e) {
      if (strict) throw;
      for (auto& s : slots) s.error = e.what();
      return slots;
    }
    const auto it = reply.find("verdicts");
    if (it == reply.end() || !it->is_array() || it->size() != end - begin)
      throw ServiceError(kModule, "/moderate reply must hold one verdict per item");
    for (std::size_t i = begin; i < end; ++i) {
      const auto& v = (*it)[i - begin];
      if (!v.is_object() || !v.contains("flagged") || !v["flagged"].is_boolean()) {
        slots[i - begin].error = v.is_object() && v.contains("error") ? v["error"].dump() : "verdict lacks 'flagged'";
        continue;
      }
      ModerationVerdict verdict{responses[i].id, v["flagged"].get<bool>(), {}};
      if (auto c = v.find("categories"); c != v.end() && c->is_array()) {
        for (const auto& cat : *c)
          if (cat.is_string()) verdict.categories.push_back(cat.get<std::string>());
      }
      slots[i - begin].verdict = std::move(verdict);
    }
    return slots;
  });

  ModerationOutcome out;
  std::size_t i = 0;
  for (auto& batch : batches) {
    for (auto& slot : batch) {
      if (slot.verdict) {
        out.verdicts.push_back(std::move(*slot.verdict));
      } else {
        out.failed_ids.push_back(responses[i].id);
      }
      ++i;
    }
  }
  if (!out.failed_ids.empty()) {
    if (strict)
      throw ServiceError(kModule, "moderation rejected " + std::to_string(out.failed_ids.size()) +
                                      " item(s): " + id_list(out.failed_ids));
    out.warnings.push_back("moderation rejected " + std::to_string(out.failed_ids.size()) + " of " +
                           std::to_string(responses.size()) + " item(s), excluded from HS: " + id_list(out.failed_ids));
  }
  return out;
}

std::vector<std::string> rouge_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    auto tok = normalize_token(std::move(current));
    if (!tok.empty()) tokens.push_back(std::move(tok));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    char32_t cp = 0;
    const auto len = decode_utf8(text, i, cp);
    if (is_unicode_space(cp)) {
      flush();
    } else {
      current.append(text.substr(i, len));
    }
    i += len;
  }
  flush();
  return tokens;
}

double rouge1_f1(std::string_view candidate, std::string_view reference) {
  const auto cand = rouge_tokens(candidate);
  const auto ref = rouge_tokens(reference);
  if (cand.empty() || ref.empty()) throw ValidationError(kModule, "Rouge-1 input is empty after tokenization");
  std::map<std::string, std::size_t> cand_counts, ref_counts;
  for (const auto& t : cand) ++cand_counts[t];
  for (const auto& t : ref) ++ref_counts[t];
  std::size_t overlap = 0;
  for (const auto& [tok, count] : cand_counts) {
    if (auto it = ref_counts.find(tok); it != ref_counts.end()) overlap += std::min(count, it->second);
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(cand.size());
  const double r = static_cast<double>(overlap) / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

double mean_rouge1_f1(const std::vector<std::string>& candidates, const std::vector<std::string>& references) {
  if (candidates.size() != references.size())
    throw ValidationError(kModule, std::to_string(candidates.size()) + " candidates vs " +
                                       std::to_string(references.size()) + " references");
  if (candidates.empty()) throw ValidationError(kModule, "no Rouge pairs");
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) sum += rouge1_f1(candidates[i], references[i]);
  return sum / static_cast<double>(candidates.size());
}

JudgeReport judge_utility(const std::vector<ResponseRecord>& responses, const ServiceEndpoint& endpoint,
                          const ClientOptions& options) {
  if (responses.empty()) throw ValidationError(kModule, "nothing to judge");
  if (options.batch == 0) throw ValidationError(kModule, "batch size must be >= 1");
  const auto ranges = batch_ranges(responses.size(), options.batch);
  auto batches = run_bounded<std::vector<double>>(ranges.size(), options.max_in_flight, [&](std::size_t b) {
    const auto [begin, end] = ranges[b];
    const auto reply = post_json(endpoint, "/judge", items_payload(responses, begin, end), options.retry, kModule);
    const auto it = reply.find("scores");
    if (it == reply.end() || !it->is_array() || it->size() != end - begin)
      throw ServiceError(kModule, "/judge reply must hold one score per item");
    std::vector<double> scores;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& s = (*it)[i - begin];
      if (!s.is_number()) throw ServiceError(kModule, "/judge score for '" + responses[i].id + "' is not a number");
      const double v = s.get<double>();
      if (!(v >= 1.0 && v <= 10.0))
        throw ServiceError(kModule, "/judge score " + s.dump() + " for '" + responses[i].id + "' is outside [1, 10]");
      scores.push_back(v);
    }
    return scores;
  });
  JudgeReport report;
  for (const auto& r : responses) report.ids.push_back(r.id);
  for (const auto& b : batches) report.scores.insert(report.scores.end(), b.begin(), b.end());
  double sum = 0.0;
  for (double s : report.scores) sum += s;
  report.mean = sum / static_cast<double>(report.scores.size());
  return report;
}

}  // namespace guardsim
