#include "guardsim/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "guardsim/error.hpp"
#include "guardsim/parallel.hpp"
#include "guardsim/rng.hpp"

namespace guardsim {
namespace {

const std::string kModule = "similarity";

double dot(std::span<const float> u, std::span<const float> v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += static_cast<double>(u[i]) * static_cast<double>(v[i]);
  return acc;
}

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

void require_same_dim(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.dim != b.dim)
    throw ValidationError(kModule, "dim mismatch: '" + a.corpus_name + "' has " + std::to_string(a.dim) + ", '" +
                                       b.corpus_name + "' has " + std::to_string(b.dim));
  if (a.row_count() == 0 || b.row_count() == 0) throw ValidationError(kModule, "empty embedding matrix");
}

double mean_of(const std::vector<std::size_t>& idx, const std::vector<double>& scores) {
  if (idx.empty()) return 0.0;
  double s = 0.0;
  for (auto i : idx) s += scores[i];
  return s / static_cast<double>(idx.size());
}

std::vector<std::size_t> ascending_id_order(const std::vector<std::string>& ids) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  return order;
}

/// First `count` indices of the ranking (value desc or asc, then id asc).
std::vector<std::size_t> extreme_indices(const std::vector<double>& values, const std::vector<std::string>& ids,
                                         std::size_t count, bool largest) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return largest ? values[a] > values[b] : values[a] < values[b];
    return ids[a] < ids[b];
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(), better);
  idx.resize(count);
  return idx;
}

}  // namespace

double cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size())
    throw ValidationError(kModule, "dim mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  const double nu = std::sqrt(dot(u, u));
  const double nv = std::sqrt(dot(v, v));
  if (nu == 0.0 || nv == 0.0) throw ValidationError(kModule, "cosine of a zero-norm vector");
  return clamp_unit(dot(u, v) / (nu * nv));
}

std::vector<double> row_norms(const EmbeddingMatrix& m) {
  std::vector<double> norms(m.row_count());
  for (std::size_t r = 0; r < m.row_count(); ++r) {
    norms[r] = std::sqrt(dot(m.row(r), m.row(r)));
    if (norms[r] == 0.0) throw ValidationError(kModule, "row '" + m.ids[r] + "' of '" + m.corpus_name + "' has zero norm");
  }
  return norms;
}

std::string_view to_string(SelectionMode mode) {
  return mode == SelectionMode::averaged ? "averaged" : "per_query";
}

SelectionMode parse_selection_mode(std::string_view s) {
  if (s == "averaged") return SelectionMode::averaged;
  if (s == "per_query") return SelectionMode::per_query;
  throw ValidationError(kModule, "unknown selection mode '" + std::string(s) + "'");
}

SimilarityScores score_alignment(const EmbeddingMatrix& align, const EmbeddingMatrix& down) {
  require_same_dim(align, down);
  const auto align_norms = row_norms(align);
  const auto down_norms = row_norms(down);

  SimilarityScores out;
  out.alignment_ids = align.ids;
  out.alignment_name = align.corpus_name;
  out.downstream_name = down.corpus_name;
  out.alignment_digest = align.digest;
  out.downstream_digest = down.digest;
  out.scores.resize(align.row_count());
  const auto n_down = static_cast<double>(down.row_count());
  parallel_for(align.row_count(), [&](std::size_t a) {
    const auto arow = align.row(a);
    double sum = 0.0;
    for (std::size_t d = 0; d < down.row_count(); ++d)
      sum += clamp_unit(dot(arow, down.row(d)) / (align_norms[a] * down_norms[d]));
    out.scores[a] = sum / n_down;
  }, 16);
  return out;
}

SelectionResult select_subsets(const SimilarityScores& scores, std::size_t n, std::uint64_t seed) {
  const auto total = scores.alignment_ids.size();
  if (scores.scores.size() != total) throw ValidationError(kModule, "scores and ids differ in length");
  if (n == 0) throw ValidationError(kModule, "subset size n must be >= 1");
  if (n > total)
    throw ValidationError(kModule, "subset size " + std::to_string(n) + " exceeds corpus size " + std::to_string(total));

  const auto high = extreme_indices(scores.scores, scores.alignment_ids, n, true);
  const auto low = extreme_indices(scores.scores, scores.alignment_ids, n, false);
  const auto canonical = ascending_id_order(scores.alignment_ids);
  Rng rng(seed);
  std::vector<std::size_t> random;
  for (auto pick : rng.sample_indices(total, n)) random.push_back(canonical[pick]);

  SelectionResult out;
  out.n = n;
  out.seed = seed;
  out.mode = SelectionMode::averaged;
  for (auto i : high) out.high_ids.push_back(scores.alignment_ids[i]);
  for (auto i : low) out.low_ids.push_back(scores.alignment_ids[i]);
  for (auto i : random) out.random_ids.push_back(scores.alignment_ids[i]);
  out.score_summary = {mean_of(high, scores.scores), mean_of(random, scores.scores), mean_of(low, scores.scores)};
  return out;
}

SelectionResult select_per_query(const EmbeddingMatrix& align, const EmbeddingMatrix& down, std::size_t k,
                                 std::uint64_t seed) {
  require_same_dim(align, down);
  if (k == 0) throw ValidationError(kModule, "k must be >= 1");
  if (k > align.row_count())
    throw ValidationError(kModule, "k = " + std::to_string(k) + " exceeds alignment size " +
                                       std::to_string(align.row_count()));
  const auto align_norms = row_norms(align);
  const auto down_norms = row_norms(down);

  std::vector<std::vector<std::size_t>> top(down.row_count()), bottom(down.row_count());
  parallel_for(down.row_count(), [&](std::size_t d) {
    std::vector<double> sims(align.row_count());
    const auto drow = down.row(d);
    for (std::size_t a = 0; a < align.row_count(); ++a)
      sims[a] = clamp_unit(dot(align.row(a), drow) / (align_norms[a] * down_norms[d]));
    top[d] = extreme_indices(sims, align.ids, k, true);
    bottom[d] = extreme_indices(sims, align.ids, k, false);
  }, 4);

  std::vector<char> in_high(align.row_count(), 0), in_low(align.row_count(), 0);
  for (std::size_t d = 0; d < down.row_count(); ++d) {
    for (auto a : top[d]) in_high[a] = 1;
    for (auto a : bottom[d]) in_low[a] = 1;
  }
  std::vector<std::size_t> high, low;
  for (std::size_t a = 0; a < align.row_count(); ++a) {
    if (in_high[a]) high.push_back(a);
    if (in_low[a]) low.push_back(a);
  }

  const auto averaged = score_alignment(align, down);
  const auto canonical = ascending_id_order(align.ids);
  Rng rng(seed);
  std::vector<std::size_t> random;
  for (auto pick : rng.sample_indices(align.row_count(), high.size())) random.push_back(canonical[pick]);

  SelectionResult out;
  out.n = k;
  out.seed = seed;
  out.mode = SelectionMode::per_query;
  for (auto i : high) out.high_ids.push_back(align.ids[i]);
  for (auto i : low) out.low_ids.push_back(align.ids[i]);
  for (auto i : random) out.random_ids.push_back(align.ids[i]);
  out.score_summary = {mean_of(high, averaged.scores), mean_of(random, averaged.scores),
                       mean_of(low, averaged.scores)};
  return out;
}

}  // namespace guardsim
