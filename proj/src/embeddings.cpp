#include "guardsim/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "guardsim/digest.hpp"
#include "guardsim/error.hpp"

namespace guardsim {
namespace {

const std::string kModule = "embeddings";
constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n)
      throw ValidationError(kModule, std::string("truncated EMB1 payload while reading ") + what);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint32_t u32(const char* what) {
    auto b = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }

  std::uint64_t u64(const char* what) {
    auto b = take(8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

std::string_view to_string(Pooling p) {
  switch (p) {
    case Pooling::last_token:
      return "last_token";
  }
  return "unknown";
}

Pooling parse_pooling(std::string_view s) {
  if (s == "last_token") return Pooling::last_token;
  throw ValidationError(kModule, "unsupported pooling '" + std::string(s) + "' (only last_token)");
}

void EmbeddingSpec::validate() const {
  if (prompt_template.find("{instruction}") == std::string::npos ||
      prompt_template.find("{completion}") == std::string::npos)
    throw ValidationError(kModule, "template must contain {instruction} and {completion}");
}

std::string EmbeddingSpec::digest() const {
  nlohmann::ordered_json j;
  j["model_id"] = model_id;
  j["template"] = prompt_template;
  j["pooling"] = to_string(pooling);
  return sha256_hex(j.dump());
}

std::string EmbeddingSpec::render(const Example& ex) const {
  auto text = replace_all(prompt_template, "{input}", ex.input ? "\n" + *ex.input : "");
  text = replace_all(std::move(text), "{instruction}", ex.instruction);
  return replace_all(std::move(text), "{completion}", ex.output);
}

void EmbeddingMatrix::validate() const {
  if (dim == 0) throw ValidationError(kModule, "matrix dim must be positive");
  if (ids.empty()) throw ValidationError(kModule, "matrix has no rows");
  if (rows.size() != ids.size() * dim)
    throw ValidationError(kModule, "row buffer holds " + std::to_string(rows.size()) + " floats, expected " +
                                       std::to_string(ids.size()) + " x " + std::to_string(dim));
  std::unordered_set<std::string_view> seen;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (!seen.insert(ids[r]).second) throw ValidationError(kModule, "duplicate row id '" + ids[r] + "'");
    bool nonzero = false;
    for (float x : row(r)) nonzero = nonzero || x != 0.0f;
    if (!nonzero) throw ValidationError(kModule, "row '" + ids[r] + "' is all zeros");
  }
  spec.validate();
}

EmbeddingMatrix make_matrix(std::string corpus_name, std::vector<std::string> ids, std::size_t dim,
                            std::vector<float> rows, EmbeddingSpec spec) {
  EmbeddingMatrix m{std::move(corpus_name), std::move(ids), dim, std::move(rows), std::move(spec), {}};
  m.validate();
  m.digest = sha256_hex(encode_matrix(m));
  return m;
}

std::string encode_matrix(const EmbeddingMatrix& m) {
  std::string out;
  out.reserve(64 + m.rows.size() * 4 + m.ids.size() * 16);
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u64(out, m.ids.size());
  put_u64(out, m.dim);

  nlohmann::ordered_json meta;
  meta["corpus_name"] = m.corpus_name;
  meta["model_id"] = m.spec.model_id;
  meta["template"] = m.spec.prompt_template;
  meta["pooling"] = to_string(m.spec.pooling);
  const auto meta_bytes = meta.dump();
  put_u32(out, static_cast<std::uint32_t>(meta_bytes.size()));
  out += meta_bytes;

  std::uint64_t id_block = 0;
  for (const auto& id : m.ids) id_block += 4 + id.size();
  put_u64(out, id_block);
  for (const auto& id : m.ids) {
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    out += id;
  }
  for (float x : m.rows) put_u32(out, std::bit_cast<std::uint32_t>(x));
  return out;
}

EmbeddingMatrix decode_matrix(std::string_view bytes) {
  Reader in(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ValidationError(kModule, "bad magic (not an EMB1 file)");
  in.take(4, "magic");
  if (auto v = in.u32("version"); v != kVersion)
    throw ValidationError(kModule, "unsupported EMB1 version " + std::to_string(v));
  const auto rows = in.u64("row count");
  const auto dim = in.u64("dim");
  if (dim == 0) throw ValidationError(kModule, "header dim is 0");
  if (rows > std::numeric_limits<std::uint32_t>::max() || dim > std::numeric_limits<std::uint32_t>::max())
    throw ValidationError(kModule, "header dimensions out of range");

  EmbeddingMatrix m;
  m.dim = dim;
  const auto meta_len = in.u32("metadata length");
  try {
    auto meta = nlohmann::json::parse(in.take(meta_len, "metadata"));
    m.corpus_name = meta.at("corpus_name").get<std::string>();
    m.spec.model_id = meta.at("model_id").get<std::string>();
    m.spec.prompt_template = meta.at("template").get<std::string>();
    m.spec.pooling = parse_pooling(meta.at("pooling").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(kModule, std::string("malformed metadata block: ") + e.what());
  }

  const auto id_block = in.u64("id block length");
  Reader ids(in.take(id_block, "id block"));
  m.ids.reserve(std::min<std::uint64_t>(rows, id_block / 4));
  for (std::uint64_t r = 0; r < rows; ++r) {
    const auto len = ids.u32("id length");
    m.ids.emplace_back(ids.take(len, "id"));
  }
  if (ids.remaining() != 0) throw ValidationError(kModule, "id block length disagrees with header row count");

  const bool short_payload = rows > in.remaining() / 4 / dim;
  const std::uint64_t expected = short_payload ? 0 : rows * dim * 4;
  if (short_payload || in.remaining() < expected)
    throw ValidationError(kModule, "truncated EMB1 payload: header promises " + std::to_string(rows) + " x " +
                                       std::to_string(dim) + " floats, found " +
                                       std::to_string(in.remaining() / 4));
  if (in.remaining() > expected)
    throw ValidationError(kModule, "payload length " + std::to_string(in.remaining()) +
                                       " bytes disagrees with header rows x dim");
  m.rows.resize(rows * dim);
  auto payload = in.take(expected, "rows");
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(payload[i * 4 + b]);
    m.rows[i] = std::bit_cast<float>(bits);
  }
  m.validate();
  m.digest = sha256_hex(bytes);
  return m;
}

void write_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  m.validate();
  write_file_bytes(path, encode_matrix(m), kModule);
}

EmbeddingMatrix read_matrix(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError(kModule, "no such file '" + path.string() + "'");
  const auto bytes = read_file_bytes(path, kModule);
  try {
    return decode_matrix(bytes);
  } catch (const ValidationError& e) {
    throw ValidationError(kModule, path.string() + ": " + e.what());
  }
}

void check_matches_corpus(const EmbeddingMatrix& m, const Corpus& corpus) {
  if (m.ids.size() != corpus.size())
    throw ValidationError(kModule, "matrix has " + std::to_string(m.ids.size()) + " rows but corpus '" +
                                       corpus.name + "' has " + std::to_string(corpus.size()) + " examples");
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    if (m.ids[i] != corpus.examples[i].id)
      throw ValidationError(kModule, "row " + std::to_string(i) + " id '" + m.ids[i] + "' does not match corpus id '" +
                                         corpus.examples[i].id + "'");
  }
}

EmbeddingMatrix fetch_embeddings(const Corpus& corpus, const EmbeddingSpec& spec, const ServiceEndpoint& endpoint,
                                 const ClientOptions& options) {
  if (corpus.examples.empty()) throw ValidationError(kModule, "cannot embed an empty corpus");
  if (options.batch == 0) throw ValidationError(kModule, "batch size must be >= 1");
  spec.validate();

  struct Batch {
    std::size_t dim = 0;
    std::vector<float> values;
  };
  const auto ranges = batch_ranges(corpus.size(), options.batch);
  auto batches = run_bounded<Batch>(ranges.size(), options.max_in_flight, [&](std::size_t b) {
    const auto [begin, end] = ranges[b];
    nlohmann::json body;
    body["texts"] = nlohmann::json::array();
    for (std::size_t i = begin; i < end; ++i) body["texts"].push_back(spec.render(corpus.examples[i]));
    body["pooling"] = to_string(spec.pooling);
    const auto reply = post_json(endpoint, "/embed", body, options.retry, kModule);

    const auto vectors = reply.find("vectors");
    const auto dim_it = reply.find("dim");
    if (vectors == reply.end() || !vectors->is_array() || dim_it == reply.end() || !dim_it->is_number_integer())
      throw ServiceError(kModule, "/embed reply lacks 'vectors' array or integer 'dim'");
    if (vectors->size() != end - begin)
      throw ServiceError(kModule, "/embed returned " + std::to_string(vectors->size()) + " vectors for " +
                                      std::to_string(end - begin) + " texts");
    const auto dim = dim_it->get<std::int64_t>();
    if (dim <= 0) throw ServiceError(kModule, "/embed reported non-positive dim");
    Batch out{static_cast<std::size_t>(dim), {}};
    out.values.reserve((end - begin) * out.dim);
    for (const auto& v : *vectors) {
      if (!v.is_array() || v.size() != out.dim)
        throw ServiceError(kModule, "/embed vector length disagrees with reported dim " + std::to_string(dim));
      for (const auto& x : v) {
        if (!x.is_number()) throw ServiceError(kModule, "/embed vector holds a non-number");
        out.values.push_back(x.get<float>());
      }
    }
    return out;
  });

  const std::size_t dim = batches.front().dim;
  std::vector<float> rows;
  rows.reserve(corpus.size() * dim);
  for (const auto& b : batches) {
    if (b.dim != dim)
      throw ServiceError(kModule, "inconsistent dim across batches: " + std::to_string(dim) + " then " +
                                      std::to_string(b.dim));
    rows.insert(rows.end(), b.values.begin(), b.values.end());
  }
  return make_matrix(corpus.name, corpus.ids(), dim, std::move(rows), spec);
}

}  // namespace guardsim
