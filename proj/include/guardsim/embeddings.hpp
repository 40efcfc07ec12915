#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guardsim/corpus.hpp"
#include "guardsim/service.hpp"

namespace guardsim {

/// How the representation model reduces hidden states to one vector.
/// Only the final hidden state of the last completion token is defined.
enum class Pooling { last_token };

std::string_view to_string(Pooling p);
Pooling parse_pooling(std::string_view s);

/// Describes how representation vectors were (or will be) produced.
///
/// The prompt template is rendered per example before it is sent to the
/// service. Placeholders:
///   {instruction}  the example instruction
///   {input}        "\n" + input when the example has one, otherwise empty
///   {completion}   the gold output text; the service pools its last token
/// Both {instruction} and {completion} are required.
struct EmbeddingSpec {
  std::string model_id;
  std::string prompt_template = "{instruction}{input}\n{completion}";
  Pooling pooling = Pooling::last_token;

  bool operator==(const EmbeddingSpec&) const = default;

  void validate() const;
  /// Stable hash of (model_id, template, pooling); matrices with different
  /// spec digests live in different representation spaces.
  std::string digest() const;
  std::string render(const Example& ex) const;
};

/// Row-per-example float32 matrix. Rows are stored raw; normalization is
/// left to the consumers.
struct EmbeddingMatrix {
  std::string corpus_name;
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<float> rows;  // row-major, ids.size() * dim
  EmbeddingSpec spec;
  std::string digest;  // SHA-256 of the EMB1 encoding

  std::size_t row_count() const noexcept { return ids.size(); }
  std::span<const float> row(std::size_t i) const { return {rows.data() + i * dim, dim}; }

  /// Throws ValidationError when dim is 0, sizes disagree, ids repeat, or a
  /// row is all zeros (the message names the row id).
  void validate() const;
};

/// Validates and stamps the digest.
EmbeddingMatrix make_matrix(std::string corpus_name, std::vector<std::string> ids, std::size_t dim,
                            std::vector<float> rows, EmbeddingSpec spec);

/// EMB1 encoding, all integers little-endian:
///   "EMB1" | u32 version=1 | u64 rows | u64 dim
///   | u32 meta_len | meta JSON {corpus_name, model_id, template, pooling}
///   | u64 id_block_len | (u32 len | UTF-8 bytes) per id
///   | rows*dim float32
std::string encode_matrix(const EmbeddingMatrix& m);
EmbeddingMatrix decode_matrix(std::string_view bytes);

void write_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix read_matrix(const std::filesystem::path& path);

/// Throws ValidationError unless the matrix ids equal the corpus ids in order.
void check_matches_corpus(const EmbeddingMatrix& m, const Corpus& corpus);

/// Requests one vector per example from POST {endpoint}/embed, batching
/// `options.batch` texts per request with at most `options.max_in_flight`
/// requests outstanding. Rows land in corpus order.
EmbeddingMatrix fetch_embeddings(const Corpus& corpus, const EmbeddingSpec& spec, const ServiceEndpoint& endpoint,
                                 const ClientOptions& options);

}  // namespace guardsim
