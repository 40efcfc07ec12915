#include "guardsim/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "guardsim/error.hpp"
#include "guardsim/parallel.hpp"
#include "guardsim/rng.hpp"

namespace guardsim {
namespace {

const std::string kModule = "clustering";

double squared_distance(std::span<const float> x, std::span<const double> c) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - c[i];
    acc += d * d;
  }
  return acc;
}

/// Lloyd state over rows visited in canonical (ascending id) order.
class Lloyd {
 public:
  Lloyd(const EmbeddingMatrix& m, std::size_t k) : m_(m), k_(k), dim_(m.dim) {
    order_.resize(m.row_count());
    std::iota(order_.begin(), order_.end(), 0);
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return m.ids[a] < m.ids[b]; });
  }

  std::size_t rows() const { return order_.size(); }
  std::span<const float> point(std::size_t pos) const { return m_.row(order_[pos]); }
  std::size_t row_of(std::size_t pos) const { return order_[pos]; }

  std::span<const double> centroid(const std::vector<double>& c, std::size_t j) const {
    return {c.data() + j * dim_, dim_};
  }

  std::vector<double> plus_plus_init(Rng& rng) const {
    std::vector<double> centroids(k_ * dim_);
    auto place = [&](std::size_t j, std::size_t pos) {
      auto p = point(pos);
      std::copy(p.begin(), p.end(), centroids.begin() + static_cast<std::ptrdiff_t>(j * dim_));
    };
    place(0, static_cast<std::size_t>(rng.below(rows())));
    std::vector<double> nearest(rows(), std::numeric_limits<double>::infinity());
    for (std::size_t j = 1; j < k_; ++j) {
      double total = 0.0;
      for (std::size_t pos = 0; pos < rows(); ++pos) {
        nearest[pos] = std::min(nearest[pos], squared_distance(point(pos), centroid(centroids, j - 1)));
        total += nearest[pos];
      }
      std::size_t chosen = 0;
      if (total > 0.0) {
        const double target = rng.unit() * total;
        double running = 0.0;
        for (std::size_t pos = 0; pos < rows(); ++pos) {
          if (nearest[pos] == 0.0) continue;
          chosen = pos;  // last positive-weight row absorbs rounding at the top end
          running += nearest[pos];
          if (running > target) break;
        }
      } else {
        chosen = static_cast<std::size_t>(rng.below(rows()));
      }
      place(j, chosen);
    }
    return centroids;
  }

  /// Nearest centroid per position; ties go to the lower cluster index.
  std::vector<std::size_t> assign(const std::vector<double>& centroids) const {
    std::vector<std::size_t> out(rows());
    parallel_for(rows(), [&](std::size_t pos) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < k_; ++j) {
        const double d = squared_distance(point(pos), centroid(centroids, j));
        if (d < best) {
          best = d;
          best_j = j;
        }
      }
      out[pos] = best_j;
    });
    return out;
  }

  /// Moves the farthest row of a multi-member cluster into each empty
  /// cluster, then reassigns; repeats at most k times.
  void repair_empty(std::vector<double>& centroids, std::vector<std::size_t>& assign_pos) const {
    for (std::size_t attempt = 0; attempt < k_; ++attempt) {
      std::vector<std::size_t> sizes(k_, 0);
      for (auto a : assign_pos) ++sizes[a];
      auto empty = std::find(sizes.begin(), sizes.end(), 0);
      if (empty == sizes.end()) return;
      double far = 0.0;
      std::size_t far_pos = rows();
      for (std::size_t pos = 0; pos < rows(); ++pos) {
        if (sizes[assign_pos[pos]] < 2) continue;
        const double d = squared_distance(point(pos), centroid(centroids, assign_pos[pos]));
        if (d > far) {
          far = d;
          far_pos = pos;
        }
      }
      if (far_pos == rows()) return;  // every row sits on its centroid; nothing to split
      const auto j = static_cast<std::size_t>(empty - sizes.begin());
      auto p = point(far_pos);
      std::copy(p.begin(), p.end(), centroids.begin() + static_cast<std::ptrdiff_t>(j * dim_));
      assign_pos = assign(centroids);
    }
  }

  /// Per-cluster means with double accumulation in position order. Empty
  /// clusters keep their previous centroid.
  std::vector<double> update(const std::vector<double>& previous, const std::vector<std::size_t>& assign_pos) const {
    std::vector<double> sums(k_ * dim_, 0.0);
    std::vector<std::size_t> counts(k_, 0);
    for (std::size_t pos = 0; pos < rows(); ++pos) {
      const auto j = assign_pos[pos];
      ++counts[j];
      auto p = point(pos);
      for (std::size_t i = 0; i < dim_; ++i) sums[j * dim_ + i] += p[i];
    }
    for (std::size_t j = 0; j < k_; ++j) {
      for (std::size_t i = 0; i < dim_; ++i) {
        sums[j * dim_ + i] = counts[j] == 0 ? previous[j * dim_ + i] : sums[j * dim_ + i] / static_cast<double>(counts[j]);
      }
    }
    return sums;
  }

  double inertia(const std::vector<double>& centroids, const std::vector<std::size_t>& assign_pos) const {
    double total = 0.0;
    for (std::size_t pos = 0; pos < rows(); ++pos)
      total += squared_distance(point(pos), centroid(centroids, assign_pos[pos]));
    return total;
  }

 private:
  const EmbeddingMatrix& m_;
  std::size_t k_;
  std::size_t dim_;
  std::vector<std::size_t> order_;
};

}  // namespace

std::vector<std::size_t> ClusterModel::members(std::size_t cluster) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < assignments.size(); ++r)
    if (assignments[r] == cluster) out.push_back(r);
  return out;
}

ClusterModel kmeans(const EmbeddingMatrix& m, const KMeansOptions& options) {
  if (options.k == 0) throw ValidationError(kModule, "k must be >= 1");
  if (options.k > m.row_count())
    throw ValidationError(kModule, "k = " + std::to_string(options.k) + " exceeds row count " +
                                       std::to_string(m.row_count()));
  if (options.max_iter == 0) throw ValidationError(kModule, "max_iter must be >= 1");
  if (!(options.tol >= 0.0)) throw ValidationError(kModule, "tol must be >= 0");

  const Lloyd lloyd(m, options.k);
  Rng rng(options.seed);
  auto centroids = lloyd.plus_plus_init(rng);
  auto assign_pos = lloyd.assign(centroids);
  lloyd.repair_empty(centroids, assign_pos);
  double inertia = lloyd.inertia(centroids, assign_pos);

  ClusterModel cm;
  cm.inertia_trace.push_back(inertia);
  std::size_t iter = 0;
  bool converged = inertia == 0.0;
  while (!converged && iter < options.max_iter) {
    ++iter;
    auto next_centroids = lloyd.update(centroids, assign_pos);
    auto next_assign = lloyd.assign(next_centroids);
    lloyd.repair_empty(next_centroids, next_assign);
    const double next_inertia = lloyd.inertia(next_centroids, next_assign);
    if (next_inertia > inertia) {
      converged = true;
      break;
    }
    const bool stable = next_assign == assign_pos;
    const double improvement = inertia > 0.0 ? (inertia - next_inertia) / inertia : 0.0;
    centroids = std::move(next_centroids);
    assign_pos = std::move(next_assign);
    inertia = next_inertia;
    cm.inertia_trace.push_back(inertia);
    converged = stable || inertia == 0.0 || improvement < options.tol;
  }

  cm.k = options.k;
  cm.dim = m.dim;
  cm.centroids = std::move(centroids);
  cm.assignments.resize(m.row_count());
  for (std::size_t pos = 0; pos < lloyd.rows(); ++pos) cm.assignments[lloyd.row_of(pos)] = assign_pos[pos];
  cm.inertia = inertia;
  cm.seed = options.seed;
  cm.iterations_run = iter;
  cm.converged = converged;
  cm.ids = m.ids;
  cm.matrix_digest = m.digest;
  return cm;
}

double compute_inertia(const ClusterModel& cm, const EmbeddingMatrix& m) {
  double total = 0.0;
  for (std::size_t r = 0; r < m.row_count(); ++r) total += squared_distance(m.row(r), cm.centroid(cm.assignments[r]));
  return total;
}

std::optional<double> mean_pairwise_cosine(const EmbeddingMatrix& m, std::span<const std::size_t> rows) {
  if (rows.size() < 2) return std::nullopt;
  std::vector<double> sum(m.dim, 0.0);
  double self = 0.0;
  for (auto r : rows) {
    auto x = m.row(r);
    double norm2 = 0.0;
    for (float v : x) norm2 += static_cast<double>(v) * v;
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) throw ValidationError(kModule, "row '" + m.ids[r] + "' has zero norm");
    double unit2 = 0.0;
    for (std::size_t i = 0; i < m.dim; ++i) {
      const double u = x[i] / norm;
      sum[i] += u;
      unit2 += u * u;
    }
    self += unit2;
  }
  double total2 = 0.0;
  for (double s : sum) total2 += s * s;
  const double n = static_cast<double>(rows.size());
  return std::clamp((total2 - self) / (n * (n - 1.0)), -1.0, 1.0);
}

std::vector<ClusterReport> cluster_stats(const ClusterModel& cm, const EmbeddingMatrix& m, std::size_t sample_count,
                                         std::uint64_t seed) {
  if (cm.matrix_digest != m.digest || cm.ids != m.ids || cm.dim != m.dim)
    throw ValidationError(kModule, "cluster model was not fitted on matrix '" + m.corpus_name + "' (digest mismatch)");
  std::vector<ClusterReport> out(cm.k);
  Rng rng(seed);
  for (std::size_t c = 0; c < cm.k; ++c) {
    const auto members = cm.members(c);
    out[c].cluster = c;
    out[c].size = members.size();
    out[c].intra_similarity = mean_pairwise_cosine(m, members);
    auto picks = rng.sample_indices(members.size(), std::min(sample_count, members.size()));
    std::sort(picks.begin(), picks.end());
    for (auto p : picks) out[c].sample_ids.push_back(m.ids[members[p]]);
  }
  return out;
}

Corpus sample_cluster(const ClusterModel& cm, const Corpus& corpus, std::size_t cluster, std::size_t n,
                      std::uint64_t seed) {
  if (cluster >= cm.k)
    throw ValidationError(kModule, "cluster " + std::to_string(cluster) + " out of range [0, " + std::to_string(cm.k) + ")");
  if (corpus.ids() != cm.ids)
    throw ValidationError(kModule, "corpus '" + corpus.name + "' ids do not match the clustered matrix");
  if (n == 0) throw ValidationError(kModule, "sample size must be >= 1");
  const auto members = cm.members(cluster);
  if (n > members.size())
    throw ValidationError(kModule, "sample size " + std::to_string(n) + " exceeds cluster " + std::to_string(cluster) +
                                       " size " + std::to_string(members.size()));
  Rng rng(seed);
  auto picks = rng.sample_indices(members.size(), n);
  std::sort(picks.begin(), picks.end());
  Corpus out{corpus.name + ".cluster" + std::to_string(cluster), {}, {}};
  for (auto p : picks) out.examples.push_back(corpus.examples[members[p]]);
  out.source_digest = content_digest(out);
  return out;
}

}  // namespace guardsim
