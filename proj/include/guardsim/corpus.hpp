#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace guardsim {

/// One instruction/response record.
struct Example {
  std::string id;
  std::string instruction;
  std::optional<std::string> input;
  std::string output;
  std::vector<std::string> tags;

  bool operator==(const Example&) const = default;
};

/// Ordered, immutable-after-load collection of examples.
struct Corpus {
  std::string name;
  std::vector<Example> examples;
  std::string source_digest;

  std::size_t size() const noexcept { return examples.size(); }
  std::vector<std::string> ids() const;
};

/// Request to inject a fraction of `additive` into `base`.
struct MixSpec {
  std::string base;
  std::string additive;
  double ratio = 0.1;
  std::uint64_t seed = 0;
};

struct MixResult {
  Corpus corpus;
  std::size_t injected = 0;
  bool with_replacement = false;
  std::vector<std::string> warnings;
};

inline constexpr std::string_view kInjectedTag = "injected";

/// Synthesized id for a record without an explicit "id": "<name>:<six-digit row>".
std::string synthesize_id(std::string_view corpus_name, std::size_t row);

/// Parses line-delimited JSON records. Blank lines are skipped but still
/// counted for error line numbers.
Corpus parse_corpus(std::string_view text, const std::string& name, std::string source_digest);

/// Loads a JSONL corpus; source_digest is the SHA-256 of the file bytes.
Corpus load_corpus(const std::filesystem::path& path, const std::string& name);

/// Canonical JSONL rendering: id, instruction, input (when present), output, tags (when any).
std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// SHA-256 of the canonical serialization; the digest given to derived corpora.
std::string content_digest(const Corpus& corpus);

/// True when the file at `path` still hashes to corpus.source_digest.
bool verify_digest(const Corpus& corpus, const std::filesystem::path& path);

/// Number of additive examples injected: max(1, round(ratio * base_size)).
std::size_t injection_count(double ratio, std::size_t base_size);

/// Appends round(ratio * |base|) additive examples at seeded-uniform positions.
/// Base order is preserved; injected examples carry the "injected" tag and
/// a "source:<additive name>" tag. Falls back to drawing with replacement
/// (recorded in warnings) when the additive corpus is too small.
MixResult mix_corpora(const MixSpec& spec, const Corpus& base, const Corpus& additive);

/// Drops examples whose (instruction, input, output) repeats an earlier one.
Corpus deduplicate(const Corpus& corpus);

/// Count of examples whose text repeats an earlier example.
std::size_t count_duplicate_texts(const Corpus& corpus);

}  // namespace guardsim
