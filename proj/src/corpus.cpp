#include "guardsim/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <tuple>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "guardsim/digest.hpp"
#include "guardsim/error.hpp"
#include "guardsim/rng.hpp"

namespace guardsim {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const std::string kModule = "corpus";

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

std::string required_text(const json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) throw ValidationError(kModule, line_error(line, std::string("missing field '") + key + "'"));
  if (!it->is_string()) throw ValidationError(kModule, line_error(line, std::string("field '") + key + "' is not a string"));
  auto value = it->get<std::string>();
  if (is_blank(value)) throw ValidationError(kModule, line_error(line, std::string("field '") + key + "' is blank"));
  return value;
}

Example parse_record(std::string_view raw, std::size_t line, std::size_t row, const std::string& name) {
  json rec;
  try {
    rec = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw ValidationError(kModule, line_error(line, std::string("malformed JSON (") + e.what() + ")"));
  }
  if (!rec.is_object()) throw ValidationError(kModule, line_error(line, "record is not a JSON object"));

  Example ex;
  ex.instruction = required_text(rec, "instruction", line);
  ex.output = required_text(rec, "output", line);
  if (auto it = rec.find("input"); it != rec.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError(kModule, line_error(line, "field 'input' is not a string"));
    auto input = it->get<std::string>();
    if (!input.empty()) ex.input = std::move(input);
  }
  if (auto it = rec.find("id"); it != rec.end()) {
    if (!it->is_string() || it->get<std::string>().empty())
      throw ValidationError(kModule, line_error(line, "field 'id' must be a non-empty string"));
    ex.id = it->get<std::string>();
  } else {
    ex.id = synthesize_id(name, row);
  }
  if (auto it = rec.find("tags"); it != rec.end()) {
    if (!it->is_array()) throw ValidationError(kModule, line_error(line, "field 'tags' is not an array"));
    for (const auto& t : *it) {
      if (!t.is_string()) throw ValidationError(kModule, line_error(line, "tag is not a string"));
      auto tag = t.get<std::string>();
      if (std::find(ex.tags.begin(), ex.tags.end(), tag) == ex.tags.end()) ex.tags.push_back(std::move(tag));
    }
  }
  return ex;
}

std::string unique_id(const std::string& wanted, std::unordered_set<std::string>& taken) {
  if (taken.insert(wanted).second) return wanted;
  for (std::size_t n = 1;; ++n) {
    auto candidate = wanted + "#" + std::to_string(n);
    if (taken.insert(candidate).second) return candidate;
  }
}

}  // namespace

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.id);
  return out;
}

std::string synthesize_id(std::string_view corpus_name, std::size_t row) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", row);
  return std::string(corpus_name) + ":" + buf;
}

Corpus parse_corpus(std::string_view text, const std::string& name, std::string source_digest) {
  Corpus corpus{name, {}, std::move(source_digest)};
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (is_blank(raw)) continue;
    auto ex = parse_record(raw, line_no, corpus.examples.size(), name);
    if (!seen.insert(ex.id).second)
      throw ValidationError(kModule, line_error(line_no, "duplicate id '" + ex.id + "'"));
    corpus.examples.push_back(std::move(ex));
  }
  if (corpus.examples.empty()) throw ValidationError(kModule, "corpus '" + name + "' has no records");
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const std::string& name) {
  if (!std::filesystem::exists(path)) throw IoError(kModule, "no such file '" + path.string() + "'");
  const auto bytes = read_file_bytes(path, kModule);
  try {
    return parse_corpus(bytes, name, sha256_hex(bytes));
  } catch (const ValidationError& e) {
    throw ValidationError(kModule, path.string() + ": " + std::string(e.what()).substr(kModule.size() + 2));
  }
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& ex : corpus.examples) {
    ordered_json rec;
    rec["id"] = ex.id;
    rec["instruction"] = ex.instruction;
    if (ex.input) rec["input"] = *ex.input;
    rec["output"] = ex.output;
    if (!ex.tags.empty()) rec["tags"] = ex.tags;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_corpus(corpus), kModule);
}

std::string content_digest(const Corpus& corpus) { return sha256_hex(serialize_corpus(corpus)); }

bool verify_digest(const Corpus& corpus, const std::filesystem::path& path) {
  return sha256_file(path) == corpus.source_digest;
}

std::size_t injection_count(double ratio, std::size_t base_size) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ValidationError(kModule, "mix ratio must lie in (0, 1]");
  const auto rounded = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(base_size)));
  return std::max<std::size_t>(1, rounded);
}

MixResult mix_corpora(const MixSpec& spec, const Corpus& base, const Corpus& additive) {
  if (additive.examples.empty()) throw ValidationError(kModule, "additive corpus '" + additive.name + "' is empty");
  const std::size_t count = injection_count(spec.ratio, base.size());

  MixResult result;
  Rng rng(spec.seed);
  std::vector<std::size_t> drawn;
  if (additive.size() >= count) {
    drawn = rng.sample_indices(additive.size(), count);
  } else {
    result.with_replacement = true;
    result.warnings.push_back("additive corpus '" + additive.name + "' has " + std::to_string(additive.size()) +
                              " examples but " + std::to_string(count) + " are needed; drawing with replacement");
    drawn.reserve(count);
    for (std::size_t i = 0; i < count; ++i) drawn.push_back(static_cast<std::size_t>(rng.below(additive.size())));
  }

  const std::size_t total = base.size() + count;
  auto slots = rng.sample_indices(total, count);
  std::sort(slots.begin(), slots.end());

  std::unordered_set<std::string> taken;
  for (const auto& ex : base.examples) taken.insert(ex.id);

  Corpus& mixed = result.corpus;
  mixed.name = spec.base.empty() ? base.name : spec.base;
  mixed.name += "+" + (spec.additive.empty() ? additive.name : spec.additive);
  mixed.examples.reserve(total);
  std::size_t next_base = 0;
  std::size_t next_slot = 0;
  for (std::size_t pos = 0; pos < total; ++pos) {
    if (next_slot < slots.size() && slots[next_slot] == pos) {
      Example ex = additive.examples[drawn[next_slot]];
      ex.id = unique_id(ex.id, taken);
      for (auto tag : {std::string(kInjectedTag), "source:" + additive.name}) {
        if (std::find(ex.tags.begin(), ex.tags.end(), tag) == ex.tags.end()) ex.tags.push_back(tag);
      }
      mixed.examples.push_back(std::move(ex));
      ++next_slot;
    } else {
      mixed.examples.push_back(base.examples[next_base++]);
    }
  }
  result.injected = count;
  mixed.source_digest = content_digest(mixed);
  return result;
}

namespace {
using TextKey = std::tuple<std::string, std::string, bool, std::string>;
TextKey text_key(const Example& ex) {
  return {ex.instruction, ex.input.value_or(""), ex.input.has_value(), ex.output};
}
}  // namespace

Corpus deduplicate(const Corpus& corpus) {
  Corpus out{corpus.name, {}, {}};
  std::set<TextKey> seen;
  for (const auto& ex : corpus.examples) {
    if (seen.insert(text_key(ex)).second) out.examples.push_back(ex);
  }
  out.source_digest = content_digest(out);
  return out;
}

std::size_t count_duplicate_texts(const Corpus& corpus) {
  std::set<TextKey> seen;
  std::size_t dups = 0;
  for (const auto& ex : corpus.examples) dups += seen.insert(text_key(ex)).second ? 0 : 1;
  return dups;
}

}  // namespace guardsim
