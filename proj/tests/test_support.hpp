#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "guardsim/digest.hpp"
#include "guardsim/embeddings.hpp"
#include "oracles.hpp"

namespace testsupport {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("guardsim-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<std::string> make_ids(const std::string& prefix, std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

/// Matrix from oracle rows; `scale` multiplies every value before float conversion.
inline guardsim::EmbeddingMatrix to_matrix(const oracle::Rows& rows, const std::vector<std::string>& ids,
                                           const std::string& name = "m", double scale = 1.0,
                                           const std::string& model_id = "test-model") {
  const std::size_t dim = rows.empty() ? 0 : rows[0].size();
  std::vector<float> flat;
  for (const auto& r : rows)
    for (double x : r) flat.push_back(static_cast<float>(x * scale));
  guardsim::EmbeddingSpec spec;
  spec.model_id = model_id;
  return guardsim::make_matrix(name, ids, dim, std::move(flat), spec);
}

/// Like to_matrix but skips matrix validation, for Euclidean fixtures that
/// include the origin (k-means does not need nonzero rows).
inline guardsim::EmbeddingMatrix raw_matrix(const oracle::Rows& rows, const std::vector<std::string>& ids) {
  guardsim::EmbeddingMatrix m;
  m.corpus_name = "raw";
  m.ids = ids;
  m.dim = rows[0].size();
  for (const auto& r : rows)
    for (double x : r) m.rows.push_back(static_cast<float>(x));
  m.spec.model_id = "test-model";
  m.digest = guardsim::sha256_hex(guardsim::encode_matrix(m));
  return m;
}

/// Rows as the library sees them (after float conversion).
inline oracle::Rows rows_of(const guardsim::EmbeddingMatrix& m) {
  oracle::Rows out(m.row_count(), std::vector<double>(m.dim));
  for (std::size_t r = 0; r < m.row_count(); ++r)
    for (std::size_t c = 0; c < m.dim; ++c) out[r][c] = m.rows[r * m.dim + c];
  return out;
}

}  // namespace testsupport
