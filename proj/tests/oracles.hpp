#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. Nothing here calls into the library's numeric code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline double cos_pair(const std::vector<double>& u, const std::vector<double>& v) {
  double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) uv += u[i] * v[i];
  for (std::size_t i = 0; i < u.size(); ++i) uu += u[i] * u[i];
  for (std::size_t i = 0; i < v.size(); ++i) vv += v[i] * v[i];
  return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

/// Averaged score of every alignment row: double loop over all pairs.
inline std::vector<double> scores(const Rows& align, const Rows& down) {
  std::vector<double> out;
  for (const auto& a : align) {
    double s = 0;
    for (const auto& d : down) s += cos_pair(a, d);
    out.push_back(s / static_cast<double>(down.size()));
  }
  return out;
}

/// Full sort by (value, id): descending values for top, ascending for bottom.
inline std::set<std::string> top_n(const std::vector<double>& values, const std::vector<std::string>& ids,
                                   std::size_t n, bool largest) {
  std::vector<std::pair<double, std::string>> all;
  for (std::size_t i = 0; i < values.size(); ++i) all.emplace_back(largest ? -values[i] : values[i], ids[i]);
  std::sort(all.begin(), all.end());
  std::set<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.insert(all[i].second);
  return out;
}

/// Per-query unions: for each downstream row, the n best/worst alignment ids.
inline std::pair<std::set<std::string>, std::set<std::string>> per_query(const Rows& align, const Rows& down,
                                                                         const std::vector<std::string>& ids,
                                                                         std::size_t k) {
  std::set<std::string> high, low;
  for (const auto& d : down) {
    std::vector<double> sims;
    for (const auto& a : align) sims.push_back(cos_pair(a, d));
    for (const auto& id : top_n(sims, ids, k, true)) high.insert(id);
    for (const auto& id : top_n(sims, ids, k, false)) low.insert(id);
  }
  return {high, low};
}

inline double mean_pairwise_cos(const Rows& rows) {
  double s = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j, ++pairs) s += cos_pair(rows[i], rows[j]);
  return s / static_cast<double>(pairs);
}

/// Min-K% Prob by sorting a copy and averaging the prefix.
inline double min_k(std::vector<double> lp, double k) {
  std::sort(lp.begin(), lp.end());
  auto m = static_cast<std::size_t>(std::floor(k * static_cast<double>(lp.size()) / 100.0));
  m = std::clamp<std::size_t>(m, 1, lp.size());
  double s = 0;
  for (std::size_t i = 0; i < m; ++i) s += lp[i];
  return s / static_cast<double>(m);
}

/// Optimal 1-D k-means inertia and centroids by enumerating every labelling.
struct Partition {
  double inertia = std::numeric_limits<double>::infinity();
  std::vector<double> centroids;  // sorted
};

inline Partition exhaustive_kmeans_1d(const std::vector<double>& xs, std::size_t k) {
  Partition best;
  std::vector<std::size_t> label(xs.size(), 0);
  for (;;) {
    std::vector<double> sum(k, 0.0);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < xs.size(); ++i) sum[label[i]] += xs[i], ++cnt[label[i]];
    if (std::all_of(cnt.begin(), cnt.end(), [](std::size_t c) { return c > 0; })) {
      double inertia = 0;
      std::vector<double> cen(k);
      for (std::size_t c = 0; c < k; ++c) cen[c] = sum[c] / static_cast<double>(cnt[c]);
      for (std::size_t i = 0; i < xs.size(); ++i) inertia += (xs[i] - cen[label[i]]) * (xs[i] - cen[label[i]]);
      if (inertia < best.inertia) {
        std::sort(cen.begin(), cen.end());
        best = {inertia, cen};
      }
    }
    std::size_t pos = 0;
    while (pos < label.size() && ++label[pos] == k) label[pos++] = 0;
    if (pos == label.size()) break;
  }
  return best;
}

/// Unigram F1 from explicit count maps; tokens are pre-split.
inline double unigram_f1(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  std::map<std::string, int> c, r;
  for (const auto& t : cand) ++c[t];
  for (const auto& t : ref) ++r[t];
  int overlap = 0;
  for (const auto& [tok, n] : c)
    if (auto it = r.find(tok); it != r.end()) overlap += std::min(n, it->second);
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(cand.size());
  const double rc = static_cast<double>(overlap) / static_cast<double>(ref.size());
  return 2 * p * rc / (p + rc);
}

/// Random standard-normal rows drawn as float so they survive conversion exactly.
inline Rows gaussian_rows(std::mt19937_64& gen, std::size_t n, std::size_t dim) {
  std::normal_distribution<float> nd(0.0f, 1.0f);
  Rows out(n, std::vector<double>(dim));
  for (auto& row : out) {
    for (auto& x : row) x = nd(gen);
  }
  return out;
}

}  // namespace oracle
