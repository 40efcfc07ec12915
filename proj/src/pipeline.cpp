#include "guardsim/pipeline.hpp"

#include <unordered_map>

#include "guardsim/clustering.hpp"
#include "guardsim/contamination.hpp"
#include "guardsim/corpus.hpp"
#include "guardsim/digest.hpp"
#include "guardsim/error.hpp"
#include "guardsim/risk.hpp"

namespace guardsim {
namespace {

const std::string kModule = "pipeline";

Json optional_path(const std::optional<std::filesystem::path>& p) { return p ? Json(p->string()) : Json(nullptr); }

struct Side {
  EmbeddingMatrix matrix;
  std::optional<Corpus> corpus;
};

Side resolve_side(const std::optional<std::filesystem::path>& emb, const std::optional<std::filesystem::path>& corpus_path,
                  const std::string& name, const PipelineConfig& config, const std::filesystem::path& fetched_out) {
  Side side;
  if (corpus_path) side.corpus = load_corpus(*corpus_path, name);
  if (emb) {
    side.matrix = read_matrix(*emb);
    if (side.corpus) check_matches_corpus(side.matrix, *side.corpus);
    return side;
  }
  if (!side.corpus)
    throw ValidationError(kModule, "the " + name + " side needs an embedding file or a corpus plus endpoint");
  if (!config.embed_endpoint)
    throw ValidationError(kModule, "corpus '" + name + "' has no embeddings and no embedding endpoint is configured");
  side.matrix = fetch_embeddings(*side.corpus, config.spec, *config.embed_endpoint, config.client);
  write_matrix(side.matrix, fetched_out);
  return side;
}

Corpus subset_corpus(const Corpus& corpus, const std::vector<std::string>& ids, const std::string& label) {
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < corpus.size(); ++i) index.emplace(corpus.examples[i].id, i);
  Corpus out{corpus.name + "." + label, {}, {}};
  for (const auto& id : ids) out.examples.push_back(corpus.examples.at(index.at(id)));
  out.source_digest = content_digest(out);
  return out;
}

bool is_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

}  // namespace

Json PipelineConfig::to_json() const {
  Json j;
  j["out_dir"] = out_dir.string();
  j["align_emb"] = optional_path(align_emb);
  j["down_emb"] = optional_path(down_emb);
  j["align_corpus"] = optional_path(align_corpus);
  j["down_corpus"] = optional_path(down_corpus);
  j["align_name"] = align_name;
  j["down_name"] = down_name;
  j["embed_endpoint"] = embed_endpoint ? Json(embed_endpoint->base_url) : Json(nullptr);
  j["embedding_spec"] = {{"model_id", spec.model_id}, {"template", spec.prompt_template}, {"pooling", to_string(spec.pooling)}};
  j["batch"] = client.batch;
  j["n"] = n;
  j["seed"] = seed;
  j["mode"] = to_string(mode);
  j["cluster_k"] = cluster_k ? Json(*cluster_k) : Json(nullptr);
  j["max_iter"] = max_iter;
  j["tol"] = tol;
  j["logprobs"] = logprobs ? Json(*logprobs) : Json(nullptr);
  j["ks"] = ks;
  j["candidates"] = optional_path(candidates);
  j["risk_threshold"] = risk_threshold ? Json(*risk_threshold) : Json(nullptr);
  j["strict"] = strict;
  return j;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) throw IoError(kModule, "cannot create output directory '" + config.out_dir.string() + "': " + ec.message());

  PipelineResult result;
  const Json cfg = config.to_json();
  auto emit = [&](const std::string& file, const Json& body) {
    const auto path = config.out_dir / file;
    write_json(path, body);
    result.artifacts.push_back(path);
  };

  const auto align = resolve_side(config.align_emb, config.align_corpus, config.align_name, config,
                                  config.out_dir / "alignment.emb");
  const auto down = resolve_side(config.down_emb, config.down_corpus, config.down_name, config,
                                 config.out_dir / "downstream.emb");
  if (!config.align_emb) result.artifacts.push_back(config.out_dir / "alignment.emb");
  if (!config.down_emb) result.artifacts.push_back(config.out_dir / "downstream.emb");

  std::vector<std::pair<std::string, std::string>> inputs{{"alignment_matrix", align.matrix.digest},
                                                          {"downstream_matrix", down.matrix.digest}};
  if (align.corpus) inputs.emplace_back("alignment_corpus", align.corpus->source_digest);
  if (down.corpus) inputs.emplace_back("downstream_corpus", down.corpus->source_digest);

  result.scores = score_alignment(align.matrix, down.matrix);
  auto scores_json = to_json(result.scores);
  scores_json["provenance"] = provenance(cfg, inputs);
  emit("scores.json", scores_json);

  result.selection = config.mode == SelectionMode::averaged
                         ? select_subsets(result.scores, config.n, config.seed)
                         : select_per_query(align.matrix, down.matrix, config.n, config.seed);
  auto selection_json = to_json(result.selection);
  auto selection_inputs = inputs;
  selection_inputs.emplace_back("scores", sha256_hex(scores_json.dump(2) + "\n"));
  selection_json["provenance"] = provenance(cfg, selection_inputs);
  emit("selection.json", selection_json);

  if (align.corpus) {
    for (const auto& [label, ids] : {std::pair{"high", &result.selection.high_ids},
                                     std::pair{"low", &result.selection.low_ids},
                                     std::pair{"random", &result.selection.random_ids}}) {
      const auto path = config.out_dir / (std::string(label) + ".jsonl");
      save_corpus(subset_corpus(*align.corpus, *ids, label), path);
      result.artifacts.push_back(path);
    }
  }

  if (config.cluster_k) {
    const auto model = kmeans(align.matrix, {*config.cluster_k, config.seed, config.max_iter, config.tol});
    Json clusters;
    clusters["kind"] = "clusters";
    clusters["model"] = to_json(model);
    clusters["stats"] = to_json(cluster_stats(model, align.matrix, 5, config.seed));
    clusters["provenance"] = provenance(cfg, {{"alignment_matrix", align.matrix.digest}});
    emit("clusters.json", clusters);
  }

  if (config.logprobs) {
    if (!align.corpus) throw ValidationError(kModule, "contamination screening needs the alignment corpus");
    std::vector<TokenLogProbs> lp;
    std::string lp_digest;
    if (is_url(*config.logprobs)) {
      lp = fetch_logprobs(*align.corpus, {*config.logprobs, config.embed_endpoint ? config.embed_endpoint->token : ""},
                          config.client);
      lp_digest = "service:" + *config.logprobs;
    } else {
      lp = load_logprobs(*config.logprobs);
      lp_digest = sha256_file(*config.logprobs);
    }
    auto report = to_json(contamination_report(*align.corpus, lp, config.ks));
    report["provenance"] = provenance(cfg, {{"alignment_corpus", align.corpus->source_digest}, {"logprobs", lp_digest}});
    emit("contamination.json", report);
  }

  if (config.candidates) {
    const auto candidates = load_manifest(*config.candidates);
    RiskOptions opts;
    opts.threshold = config.risk_threshold;
    opts.strict = config.strict;
    const auto report = rank_models(candidates, down.matrix, opts);
    for (const auto& [id, reason] : report.excluded) result.warnings.push_back("candidate '" + id + "' excluded: " + reason);
    auto risk = to_json(report);
    std::vector<std::pair<std::string, std::string>> risk_inputs{{"user_matrix", down.matrix.digest},
                                                                 {"manifest", sha256_file(*config.candidates)}};
    for (const auto& c : candidates) risk_inputs.emplace_back("candidate:" + c.model_id, c.alignment.digest);
    risk["provenance"] = provenance(cfg, risk_inputs);
    emit("risk.json", risk);
    write_file_bytes(config.out_dir / "risk.csv", risk_csv(report), kModule);
    result.artifacts.push_back(config.out_dir / "risk.csv");
  }

  Json run;
  run["kind"] = "pipeline_run";
  run["provenance"] = provenance(cfg, inputs);
  Json files = Json::array();
  for (const auto& a : result.artifacts) files.push_back(a.filename().string());
  run["artifacts"] = std::move(files);
  run["warnings"] = result.warnings;
  emit("run.json", run);
  return result;
}

}  // namespace guardsim
