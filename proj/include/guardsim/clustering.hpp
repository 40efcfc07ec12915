#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "guardsim/corpus.hpp"
#include "guardsim/embeddings.hpp"

namespace guardsim {

struct KMeansOptions {
  std::size_t k = 20;
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  double tol = 1e-6;  // relative inertia improvement
};

/// Result of Euclidean k-means over raw embedding rows.
struct ClusterModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;           // k * dim, row-major
  std::vector<std::size_t> assignments;    // one per matrix row, matrix order
  double inertia = 0.0;
  std::uint64_t seed = 0;
  std::size_t iterations_run = 0;
  bool converged = false;
  std::vector<double> inertia_trace;       // initial state, then one entry per accepted iteration
  std::vector<std::string> ids;            // matrix ids, matrix order
  std::string matrix_digest;

  std::span<const double> centroid(std::size_t c) const { return {centroids.data() + c * dim, dim}; }
  std::vector<std::size_t> members(std::size_t cluster) const;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment is
/// stable, the relative inertia improvement drops below tol, or max_iter.
///
/// Rows are processed in ascending-id order internally, so a permuted input
/// matrix yields the same partition of ids. An empty cluster is reseeded
/// with the row farthest from its own centroid. A step that would raise
/// inertia (floating-point noise at a fixed point) is rejected and ends the
/// run, which keeps inertia_trace non-increasing.
ClusterModel kmeans(const EmbeddingMatrix& m, const KMeansOptions& options);

/// Squared Euclidean distance of every row to its assigned centroid.
double compute_inertia(const ClusterModel& cm, const EmbeddingMatrix& m);

struct ClusterReport {
  std::size_t cluster = 0;
  std::size_t size = 0;
  /// Mean pairwise cosine among members; empty for clusters with < 2 rows.
  std::optional<double> intra_similarity;
  std::vector<std::string> sample_ids;
};

/// Mean cosine over all unordered pairs of the given rows, computed from the
/// sum of unit vectors in O(rows * dim).
std::optional<double> mean_pairwise_cosine(const EmbeddingMatrix& m, std::span<const std::size_t> rows);

/// Per-cluster size, intra-group cosine similarity and up to `sample_count`
/// seeded member ids. Throws ValidationError when `m` is not the matrix the
/// model was fitted on.
std::vector<ClusterReport> cluster_stats(const ClusterModel& cm, const EmbeddingMatrix& m,
                                         std::size_t sample_count = 5, std::uint64_t seed = 0);

/// Seeded draw of n members of one cluster without replacement, emitted in
/// corpus order as a new corpus.
Corpus sample_cluster(const ClusterModel& cm, const Corpus& corpus, std::size_t cluster, std::size_t n,
                      std::uint64_t seed);

}  // namespace guardsim
