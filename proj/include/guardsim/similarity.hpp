#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guardsim/embeddings.hpp"

namespace guardsim {

/// Cosine similarity with 64-bit accumulation, clamped to [-1, 1].
/// Throws ValidationError on dim mismatch or a zero-norm input.
double cosine(std::span<const float> u, std::span<const float> v);

/// Euclidean norm of each row, accumulated in double. Throws ValidationError
/// naming the first zero-norm row.
std::vector<double> row_norms(const EmbeddingMatrix& m);

enum class SelectionMode { averaged, per_query };

std::string_view to_string(SelectionMode mode);
SelectionMode parse_selection_mode(std::string_view s);

/// Mean cosine of every alignment example against a downstream corpus.
struct SimilarityScores {
  std::vector<std::string> alignment_ids;
  std::vector<double> scores;
  std::string alignment_name;
  std::string downstream_name;
  SelectionMode mode = SelectionMode::averaged;
  std::string alignment_digest;
  std::string downstream_digest;
};

/// Mean score of each selected subset.
struct SubsetSummary {
  double high = 0.0;
  double random = 0.0;
  double low = 0.0;
};

struct SelectionResult {
  std::size_t n = 0;
  std::vector<std::string> high_ids;
  std::vector<std::string> low_ids;
  std::vector<std::string> random_ids;
  std::uint64_t seed = 0;
  SelectionMode mode = SelectionMode::averaged;
  SubsetSummary score_summary;
};

/// score(a) = mean over downstream rows d of cosine(a, d). Parallel over
/// alignment rows; each mean is summed in downstream order.
SimilarityScores score_alignment(const EmbeddingMatrix& align, const EmbeddingMatrix& down);

/// High = n largest scores, low = n smallest, random = seeded uniform draw
/// without replacement. Ties go to the lexicographically smaller id. The
/// random draw is taken over the ids in ascending order, so the result does
/// not depend on the order of the input scores.
SelectionResult select_subsets(const SimilarityScores& scores, std::size_t n, std::uint64_t seed);

/// Per-downstream-example variant: high is the union over downstream rows of
/// the k alignment rows with the largest cosine, low the union of the k
/// smallest. Union sizes can be below k * |down|. The random subset matches
/// the size of the high union. Ids are listed in alignment order; the score
/// summary uses averaged scores.
SelectionResult select_per_query(const EmbeddingMatrix& align, const EmbeddingMatrix& down, std::size_t k,
                                 std::uint64_t seed);

}  // namespace guardsim
