#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "guardsim/clustering.hpp"
#include "guardsim/contamination.hpp"
#include "guardsim/corpus.hpp"
#include "guardsim/embeddings.hpp"
#include "guardsim/error.hpp"
#include "guardsim/evaluation.hpp"
#include "guardsim/pipeline.hpp"
#include "guardsim/risk.hpp"
#include "guardsim/similarity.hpp"
#include "guardsim/testing/stub_service.hpp"

namespace py = pybind11;
using namespace guardsim;

namespace {

py::array_t<float> rows_array(const EmbeddingMatrix& m) {
  py::array_t<float> out({m.row_count(), m.dim});
  std::copy(m.rows.begin(), m.rows.end(), out.mutable_data());
  return out;
}

EmbeddingMatrix matrix_from_array(const std::string& corpus_name, std::vector<std::string> ids,
                                  py::array_t<float, py::array::c_style | py::array::forcecast> rows,
                                  const std::string& model_id) {
  if (rows.ndim() != 2) throw ValidationError("embeddings", "rows must be a 2-D array");
  if (static_cast<std::size_t>(rows.shape(0)) != ids.size())
    throw ValidationError("embeddings", "row count differs from the number of ids");
  EmbeddingSpec spec;
  spec.model_id = model_id;
  std::vector<float> flat(rows.data(), rows.data() + rows.size());
  return make_matrix(corpus_name, std::move(ids), static_cast<std::size_t>(rows.shape(1)), std::move(flat), spec);
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Representation-similarity tooling for safety-alignment data curation";

  auto base = py::register_exception<Error>(mod, "GuardsimError");
  py::register_exception<ValidationError>(mod, "ValidationError", base.ptr());
  py::register_exception<IoError>(mod, "IoError", base.ptr());
  py::register_exception<ServiceError>(mod, "ServiceError", base.ptr());

  py::class_<Example>(mod, "Example")
      .def(py::init<>())
      .def_readwrite("id", &Example::id)
      .def_readwrite("instruction", &Example::instruction)
      .def_readwrite("input", &Example::input)
      .def_readwrite("output", &Example::output)
      .def_readwrite("tags", &Example::tags)
      .def("__repr__", [](const Example& e) { return "<Example " + e.id + ">"; });

  py::class_<Corpus>(mod, "Corpus")
      .def_readonly("name", &Corpus::name)
      .def_readonly("examples", &Corpus::examples)
      .def_readonly("source_digest", &Corpus::source_digest)
      .def("ids", &Corpus::ids)
      .def("__len__", &Corpus::size);

  mod.def("load_corpus", &load_corpus, py::arg("path"), py::arg("name"));
  mod.def("save_corpus", &save_corpus, py::arg("corpus"), py::arg("path"));
  mod.def("injection_count", &injection_count, py::arg("ratio"), py::arg("base_size"));
  mod.def(
      "mix_corpora",
      [](const Corpus& base, const Corpus& additive, double ratio, std::uint64_t seed) {
        auto r = mix_corpora({base.name, additive.name, ratio, seed}, base, additive);
        py::dict out;
        out["corpus"] = std::move(r.corpus);
        out["injected"] = r.injected;
        out["with_replacement"] = r.with_replacement;
        out["warnings"] = r.warnings;
        return out;
      },
      py::arg("base"), py::arg("additive"), py::arg("ratio"), py::arg("seed") = 0);

  py::class_<EmbeddingMatrix>(mod, "EmbeddingMatrix")
      .def(py::init(&matrix_from_array), py::arg("corpus_name"), py::arg("ids"), py::arg("rows"),
           py::arg("model_id") = "")
      .def_readonly("corpus_name", &EmbeddingMatrix::corpus_name)
      .def_readonly("ids", &EmbeddingMatrix::ids)
      .def_readonly("dim", &EmbeddingMatrix::dim)
      .def_readonly("digest", &EmbeddingMatrix::digest)
      .def_property_readonly("model_id", [](const EmbeddingMatrix& m) { return m.spec.model_id; })
      .def_property_readonly("spec_digest", [](const EmbeddingMatrix& m) { return m.spec.digest(); })
      .def("to_numpy", &rows_array)
      .def("__len__", &EmbeddingMatrix::row_count);

  mod.def("read_matrix", &read_matrix, py::arg("path"));
  mod.def("write_matrix", &write_matrix, py::arg("matrix"), py::arg("path"));
  mod.def(
      "fetch_embeddings",
      [](const Corpus& corpus, const std::string& url, const std::string& model_id, std::size_t batch,
         std::size_t max_in_flight, const std::string& token) {
        EmbeddingSpec spec;
        spec.model_id = model_id;
        ClientOptions o;
        o.batch = batch;
        o.max_in_flight = max_in_flight;
        py::gil_scoped_release release;
        return fetch_embeddings(corpus, spec, {url, token}, o);
      },
      py::arg("corpus"), py::arg("endpoint"), py::arg("model_id") = "", py::arg("batch") = 32,
      py::arg("max_in_flight") = 4, py::arg("token") = "");

  py::class_<SimilarityScores>(mod, "SimilarityScores")
      .def_readonly("alignment_ids", &SimilarityScores::alignment_ids)
      .def_readonly("scores", &SimilarityScores::scores)
      .def_readonly("alignment_digest", &SimilarityScores::alignment_digest)
      .def_readonly("downstream_digest", &SimilarityScores::downstream_digest);

  py::class_<SelectionResult>(mod, "SelectionResult")
      .def_readonly("n", &SelectionResult::n)
      .def_readonly("seed", &SelectionResult::seed)
      .def_readonly("high_ids", &SelectionResult::high_ids)
      .def_readonly("low_ids", &SelectionResult::low_ids)
      .def_readonly("random_ids", &SelectionResult::random_ids)
      .def_property_readonly("mode", [](const SelectionResult& r) { return std::string(to_string(r.mode)); })
      .def_property_readonly("score_summary", [](const SelectionResult& r) {
        py::dict d;
        d["high"] = r.score_summary.high;
        d["random"] = r.score_summary.random;
        d["low"] = r.score_summary.low;
        return d;
      });

  mod.def("cosine", [](std::vector<float> u, std::vector<float> v) { return cosine(u, v); });
  mod.def("score_alignment", &score_alignment, py::arg("align"), py::arg("down"),
          py::call_guard<py::gil_scoped_release>());
  mod.def("select_subsets", &select_subsets, py::arg("scores"), py::arg("n"), py::arg("seed") = 0);
  mod.def("select_per_query", &select_per_query, py::arg("align"), py::arg("down"), py::arg("k"), py::arg("seed") = 0,
          py::call_guard<py::gil_scoped_release>());

  py::class_<ClusterModel>(mod, "ClusterModel")
      .def_readonly("k", &ClusterModel::k)
      .def_readonly("assignments", &ClusterModel::assignments)
      .def_readonly("inertia", &ClusterModel::inertia)
      .def_readonly("inertia_trace", &ClusterModel::inertia_trace)
      .def_readonly("iterations_run", &ClusterModel::iterations_run)
      .def_readonly("converged", &ClusterModel::converged)
      .def_readonly("ids", &ClusterModel::ids)
      .def_property_readonly("centroids",
                             [](const ClusterModel& cm) {
                               py::array_t<double> out({cm.k, cm.dim});
                               std::copy(cm.centroids.begin(), cm.centroids.end(), out.mutable_data());
                               return out;
                             })
      .def("members", &ClusterModel::members);

  py::class_<ClusterReport>(mod, "ClusterReport")
      .def_readonly("cluster", &ClusterReport::cluster)
      .def_readonly("size", &ClusterReport::size)
      .def_readonly("intra_similarity", &ClusterReport::intra_similarity)
      .def_readonly("sample_ids", &ClusterReport::sample_ids);

  mod.def(
      "kmeans",
      [](const EmbeddingMatrix& m, std::size_t k, std::uint64_t seed, std::size_t max_iter, double tol) {
        return kmeans(m, {k, seed, max_iter, tol});
      },
      py::arg("matrix"), py::arg("k") = 20, py::arg("seed") = 0, py::arg("max_iter") = 100, py::arg("tol") = 1e-6,
      py::call_guard<py::gil_scoped_release>());
  mod.def("cluster_stats", &cluster_stats, py::arg("model"), py::arg("matrix"), py::arg("sample_count") = 5,
          py::arg("seed") = 0);
  mod.def("sample_cluster", &sample_cluster, py::arg("model"), py::arg("corpus"), py::arg("cluster"), py::arg("n"),
          py::arg("seed") = 0);

  mod.def(
      "min_k_prob", [](const std::vector<double>& lp, double k) { return min_k_prob(std::span<const double>(lp), k); },
      py::arg("logprobs"), py::arg("k_percent"));
  mod.def(
      "contamination_report",
      [](const Corpus& corpus, const std::filesystem::path& logprobs, const std::vector<double>& ks) {
        const auto r = contamination_report(corpus, load_logprobs(logprobs), ks);
        py::dict out;
        out["ks"] = r.ks;
        out["corpus_means"] = r.corpus_means;
        py::dict rows;
        for (const auto& row : r.rows) rows[py::str(row.example_id)] = row.values;
        out["rows"] = rows;
        return out;
      },
      py::arg("corpus"), py::arg("logprobs"), py::arg("ks") = std::vector<double>{5, 10, 20});

  mod.def(
      "harmfulness_score",
      [](const std::vector<bool>& flagged) {
        std::vector<ModerationVerdict> v;
        for (std::size_t i = 0; i < flagged.size(); ++i) v.push_back({std::to_string(i), flagged[i], {}});
        const auto r = harmfulness_score(v);
        py::dict out;
        out["flagged"] = r.flagged;
        out["total"] = r.total;
        out["hs"] = r.hs;
        out["hs_percent"] = r.hs_percent();
        return out;
      },
      py::arg("flagged"));
  mod.def("format_percent", &format_percent);
  mod.def("rouge1_f1", &rouge1_f1, py::arg("candidate"), py::arg("reference"));
  mod.def("rouge_tokens", &rouge_tokens);

  mod.def("aggregate_similarity", &aggregate_similarity, py::arg("align"), py::arg("down"));
  mod.def(
      "rank_models",
      [](const std::vector<std::pair<std::string, EmbeddingMatrix>>& candidates, const EmbeddingMatrix& user,
         std::optional<double> threshold, bool strict) {
        std::vector<CandidateModel> models;
        for (const auto& [id, m] : candidates) models.push_back({id, m, "", nlohmann::ordered_json::object()});
        RiskOptions opts;
        opts.threshold = threshold;
        opts.strict = strict;
        const auto r = rank_models(models, user, opts);
        py::list entries;
        for (const auto& e : r.entries) {
          py::dict d;
          d["model_id"] = e.model_id;
          d["aggregate_similarity"] = e.aggregate_similarity;
          d["rank"] = e.rank;
          d["flag"] = std::string(to_string(e.flag));
          entries.append(d);
        }
        py::dict out;
        out["entries"] = entries;
        out["threshold"] = r.threshold;
        out["threshold_mode"] = r.threshold_mode;
        out["excluded"] = r.excluded;
        return out;
      },
      py::arg("candidates"), py::arg("user"), py::arg("threshold") = py::none(), py::arg("strict") = false);

  mod.def(
      "run_pipeline",
      [](const std::filesystem::path& out_dir, std::size_t n, std::optional<std::filesystem::path> align_emb,
         std::optional<std::filesystem::path> down_emb, std::optional<std::filesystem::path> align_corpus,
         std::optional<std::filesystem::path> down_corpus, std::uint64_t seed, const std::string& mode,
         std::optional<std::size_t> cluster_k, std::optional<std::string> logprobs,
         std::optional<std::filesystem::path> candidates, std::optional<std::string> embed_endpoint, bool strict) {
        PipelineConfig c;
        c.out_dir = out_dir;
        c.n = n;
        c.align_emb = align_emb;
        c.down_emb = down_emb;
        c.align_corpus = align_corpus;
        c.down_corpus = down_corpus;
        c.seed = seed;
        c.mode = parse_selection_mode(mode);
        c.cluster_k = cluster_k;
        c.logprobs = logprobs;
        c.candidates = candidates;
        if (embed_endpoint) c.embed_endpoint = ServiceEndpoint{*embed_endpoint, ""};
        c.strict = strict;
        PipelineResult r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(c);
        }
        py::dict out;
        out["selection"] = r.selection;
        out["artifacts"] = r.artifacts;
        out["warnings"] = r.warnings;
        return out;
      },
      py::arg("out_dir"), py::arg("n"), py::kw_only(), py::arg("align_emb") = py::none(),
      py::arg("down_emb") = py::none(), py::arg("align_corpus") = py::none(), py::arg("down_corpus") = py::none(),
      py::arg("seed") = 0, py::arg("mode") = "averaged", py::arg("cluster_k") = py::none(),
      py::arg("logprobs") = py::none(), py::arg("candidates") = py::none(), py::arg("embed_endpoint") = py::none(),
      py::arg("strict") = false);

  py::class_<testing::StubService>(mod, "StubService")
      .def(py::init([](std::size_t dim, int fail_first) {
             testing::StubConfig cfg;
             cfg.embed_dim = dim;
             cfg.fail_first = fail_first;
             return std::make_unique<testing::StubService>(cfg);
           }),
           py::arg("dim") = 8, py::arg("fail_first") = 0)
      .def_property_readonly("url", &testing::StubService::url)
      .def("embed_batch_sizes", &testing::StubService::embed_batch_sizes)
      .def("stop", &testing::StubService::stop);
}
