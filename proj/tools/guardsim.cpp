// guardsim: command-line front end for corpus handling, embedding fetch,
// similarity scoring and subset selection, clustering, contamination
// screening, metric evaluation, and model risk ranking.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "guardsim/artifacts.hpp"
#include "guardsim/clustering.hpp"
#include "guardsim/contamination.hpp"
#include "guardsim/corpus.hpp"
#include "guardsim/digest.hpp"
#include "guardsim/embeddings.hpp"
#include "guardsim/error.hpp"
#include "guardsim/evaluation.hpp"
#include "guardsim/pipeline.hpp"
#include "guardsim/risk.hpp"
#include "guardsim/similarity.hpp"

namespace {

using namespace guardsim;

struct Globals {
  std::uint64_t seed = 0;
  bool strict = false;
  std::string log_level = "info";
  std::string token;
};

struct ServiceFlags {
  std::string endpoint;
  std::size_t batch = 16;
  std::size_t max_in_flight = 4;
  int retries = 3;

  void add(CLI::App* cmd, const std::string& env, std::size_t default_batch) {
    batch = default_batch;
    auto* opt = cmd->add_option("--endpoint", endpoint, "Service base URL");
    if (!env.empty()) opt->envname(env);
    cmd->add_option("--batch", batch, "Items per request")->check(CLI::PositiveNumber);
    cmd->add_option("--max-in-flight", max_in_flight, "Concurrent requests")->check(CLI::PositiveNumber);
    cmd->add_option("--retries", retries, "Attempts per request")->check(CLI::PositiveNumber);
  }

  ClientOptions options() const {
    ClientOptions o;
    o.batch = batch;
    o.max_in_flight = max_in_flight;
    o.retry.max_attempts = retries;
    return o;
  }

  ServiceEndpoint resolve(const Globals& g, const std::string& what) const {
    if (endpoint.empty()) throw ValidationError("cli", what + " endpoint not set (flag or environment)");
    return {endpoint, g.token};
  }
};

void emit(const Json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json(out, j);
    spdlog::info("wrote {}", out);
  }
}

std::vector<double> parse_ks(const std::string& list) {
  std::vector<double> ks;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      ks.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("cli", "bad threshold '" + item + "' in --k");
    }
  }
  return ks;
}

std::vector<std::string> text_column(const std::string& path, std::initializer_list<const char*> keys) {
  const auto bytes = read_file_bytes(path, "evaluation");
  std::vector<std::string> out;
  std::stringstream ss(bytes);
  std::string line;
  std::size_t n = 0;
  while (std::getline(ss, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw ValidationError("evaluation", path + " line " + std::to_string(n) + ": malformed JSON");
    }
    bool found = false;
    for (const char* k : keys) {
      if (rec.contains(k) && rec[k].is_string()) {
        out.push_back(rec[k].get<std::string>());
        found = true;
        break;
      }
    }
    if (!found) throw ValidationError("evaluation", path + " line " + std::to_string(n) + ": no text field");
  }
  return out;
}

spdlog::level::level_enum parse_level(const std::string& s) {
  const auto level = spdlog::level::from_str(s);
  if (level == spdlog::level::off && s != "off") throw ValidationError("cli", "unknown log level '" + s + "'");
  return level;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("guardsim");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);

  CLI::App app{"Representation-similarity tooling for safety-alignment data curation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every randomized step");
  app.add_flag("--strict", g.strict, "Fail on any rejected service item or mismatched candidate");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off");
  app.add_option("--token", g.token, "Bearer token for services")->envname("GUARDSIM_API_TOKEN");

  std::function<void()> action;

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "Validate and mix JSONL corpora")->require_subcommand(1);
  std::string validate_path, validate_name;
  auto* validate = corpus_cmd->add_subcommand("validate", "Check a corpus file and print a summary");
  validate->add_option("path", validate_path)->required();
  validate->add_option("--name", validate_name);
  validate->callback([&] {
    action = [&] {
      const auto c = load_corpus(
          validate_path, validate_name.empty() ? std::filesystem::path(validate_path).stem().string() : validate_name);
      Json j;
      j["kind"] = "corpus_summary";
      j["name"] = c.name;
      j["path"] = validate_path;
      j["examples"] = c.size();
      j["duplicate_texts"] = count_duplicate_texts(c);
      j["source_digest"] = c.source_digest;
      emit(j, "");
    };
  });

  std::string mix_base, mix_additive, mix_out;
  double mix_ratio = 0.1;
  bool mix_dedup = false;
  auto* mix = corpus_cmd->add_subcommand("mix", "Inject a fraction of one corpus into another");
  mix->add_option("--base", mix_base)->required();
  mix->add_option("--additive", mix_additive)->required();
  mix->add_option("--ratio", mix_ratio)->required();
  mix->add_option("--out", mix_out)->required();
  mix->add_flag("--dedup", mix_dedup, "Drop repeated texts from the base before mixing");
  mix->callback([&] {
    action = [&] {
      auto base = load_corpus(mix_base, std::filesystem::path(mix_base).stem().string());
      const auto additive = load_corpus(mix_additive, std::filesystem::path(mix_additive).stem().string());
      if (mix_dedup) base = deduplicate(base);
      const auto r = mix_corpora({base.name, additive.name, mix_ratio, g.seed}, base, additive);
      for (const auto& w : r.warnings) spdlog::warn("{}", w);
      save_corpus(r.corpus, mix_out);
      Json j;
      j["kind"] = "mix_summary";
      j["out"] = mix_out;
      j["examples"] = r.corpus.size();
      j["injected"] = r.injected;
      j["with_replacement"] = r.with_replacement;
      j["digest"] = r.corpus.source_digest;
      j["provenance"] = provenance({{"ratio", mix_ratio}, {"seed", g.seed}, {"dedup", mix_dedup}},
                                   {{"base", base.source_digest}, {"additive", additive.source_digest}});
      emit(j, "");
    };
  });

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "Fetch and inspect EMB1 embedding matrices")->require_subcommand(1);
  std::string fetch_corpus, fetch_out, fetch_name, fetch_model = "uncensored-chat", fetch_template;
  ServiceFlags fetch_svc;
  auto* fetch = embed_cmd->add_subcommand("fetch", "Embed a corpus through the embedding service");
  fetch->add_option("--corpus", fetch_corpus)->required();
  fetch->add_option("--out", fetch_out)->required();
  fetch->add_option("--name", fetch_name, "Corpus name (default: file stem)");
  fetch->add_option("--model-id", fetch_model);
  fetch->add_option("--template", fetch_template, "Prompt template with {instruction} and {completion}");
  fetch_svc.add(fetch, "GUARDSIM_EMBED_ENDPOINT", 32);
  fetch->callback([&] {
    action = [&] {
      const auto name = fetch_name.empty() ? std::filesystem::path(fetch_corpus).stem().string() : fetch_name;
      const auto corpus = load_corpus(fetch_corpus, name);
      EmbeddingSpec spec;
      spec.model_id = fetch_model;
      if (!fetch_template.empty()) spec.prompt_template = fetch_template;
      const auto m = fetch_embeddings(corpus, spec, fetch_svc.resolve(g, "embedding"), fetch_svc.options());
      write_matrix(m, fetch_out);
      spdlog::info("embedded {} examples (dim {}) into {}", m.row_count(), m.dim, fetch_out);
    };
  });

  std::string inspect_path;
  auto* inspect = embed_cmd->add_subcommand("inspect", "Print an EMB1 header summary");
  inspect->add_option("path", inspect_path)->required();
  inspect->callback([&] {
    action = [&] {
      const auto m = read_matrix(inspect_path);
      Json j;
      j["kind"] = "matrix_summary";
      j["path"] = inspect_path;
      j["corpus_name"] = m.corpus_name;
      j["rows"] = m.row_count();
      j["dim"] = m.dim;
      j["spec"] = {{"model_id", m.spec.model_id}, {"template", m.spec.prompt_template},
                   {"pooling", to_string(m.spec.pooling)}, {"digest", m.spec.digest()}};
      j["digest"] = m.digest;
      j["first_ids"] = std::vector<std::string>(m.ids.begin(), m.ids.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(5, m.ids.size())));
      emit(j, "");
    };
  });

  // sim
  auto* sim_cmd = app.add_subcommand("sim", "Similarity scoring and subset selection")->require_subcommand(1);
  std::string score_align, score_down, score_out;
  auto* score = sim_cmd->add_subcommand("score", "Mean cosine of each alignment row to the downstream corpus");
  score->add_option("--align", score_align)->required();
  score->add_option("--down", score_down)->required();
  score->add_option("--out", score_out);
  score->callback([&] {
    action = [&] {
      const auto align = read_matrix(score_align);
      const auto down = read_matrix(score_down);
      auto j = to_json(score_alignment(align, down));
      j["provenance"] = provenance({{"align", score_align}, {"down", score_down}},
                                   {{"alignment_matrix", align.digest}, {"downstream_matrix", down.digest}});
      emit(j, score_out);
    };
  });

  std::string select_scores, select_mode = "averaged", select_out, select_align, select_down;
  std::size_t select_n = 0;
  auto* select = sim_cmd->add_subcommand("select", "Pick High-Sim / Low-Sim / Random subsets");
  select->add_option("--scores", select_scores, "scores.json (averaged mode)");
  select->add_option("--n", select_n, "Subset size (per-query: k per downstream example)")->required()->check(CLI::PositiveNumber);
  select->add_option("--mode", select_mode)->check(CLI::IsMember({"averaged", "per_query"}));
  select->add_option("--align", select_align, "Alignment EMB1 (per_query mode)");
  select->add_option("--down", select_down, "Downstream EMB1 (per_query mode)");
  select->add_option("--out", select_out);
  select->callback([&] {
    action = [&] {
      const auto mode = parse_selection_mode(select_mode);
      Json cfg{{"n", select_n}, {"seed", g.seed}, {"mode", select_mode}};
      if (mode == SelectionMode::averaged) {
        if (select_scores.empty()) throw ValidationError("cli", "--scores is required in averaged mode");
        const auto raw = read_json(select_scores, "similarity");
        auto j = to_json(select_subsets(scores_from_json(raw), select_n, g.seed));
        j["provenance"] = provenance(cfg, {{"scores", sha256_file(select_scores)},
                                           {"alignment_matrix", raw.value("alignment_digest", "")},
                                           {"downstream_matrix", raw.value("downstream_digest", "")}});
        emit(j, select_out);
      } else {
        if (select_align.empty() || select_down.empty())
          throw ValidationError("cli", "--align and --down are required in per_query mode");
        const auto align = read_matrix(select_align);
        const auto down = read_matrix(select_down);
        auto j = to_json(select_per_query(align, down, select_n, g.seed));
        j["provenance"] = provenance(cfg, {{"alignment_matrix", align.digest}, {"downstream_matrix", down.digest}});
        emit(j, select_out);
      }
    };
  });

  // cluster
  auto* cluster_cmd = app.add_subcommand("cluster", "k-means cluster discovery")->require_subcommand(1);
  std::string fit_emb, fit_out;
  KMeansOptions fit_opts;
  auto* fit = cluster_cmd->add_subcommand("fit", "Fit k-means on an embedding matrix");
  fit->add_option("--emb", fit_emb)->required();
  fit->add_option("--k", fit_opts.k)->check(CLI::PositiveNumber);
  fit->add_option("--max-iter", fit_opts.max_iter)->check(CLI::PositiveNumber);
  fit->add_option("--tol", fit_opts.tol)->check(CLI::NonNegativeNumber);
  fit->add_option("--out", fit_out);
  fit->callback([&] {
    action = [&] {
      const auto m = read_matrix(fit_emb);
      fit_opts.seed = g.seed;
      const auto cm = kmeans(m, fit_opts);
      auto j = to_json(cm);
      j["provenance"] = provenance({{"k", fit_opts.k}, {"seed", g.seed}, {"max_iter", fit_opts.max_iter}, {"tol", fit_opts.tol}},
                                   {{"matrix", m.digest}});
      emit(j, fit_out);
    };
  });

  std::string stats_model, stats_emb, stats_out;
  std::size_t stats_samples = 5;
  auto* stats = cluster_cmd->add_subcommand("stats", "Per-cluster size and intra-group cosine similarity");
  stats->add_option("--model", stats_model)->required();
  stats->add_option("--emb", stats_emb)->required();
  stats->add_option("--samples", stats_samples, "Member ids to list per cluster");
  stats->add_option("--out", stats_out);
  stats->callback([&] {
    action = [&] {
      const auto cm = cluster_model_from_json(read_json(stats_model, "clustering"));
      const auto m = read_matrix(stats_emb);
      Json j;
      j["kind"] = "cluster_stats";
      j["clusters"] = to_json(cluster_stats(cm, m, stats_samples, g.seed));
      j["provenance"] = provenance({{"samples", stats_samples}, {"seed", g.seed}},
                                   {{"model", sha256_file(stats_model)}, {"matrix", m.digest}});
      emit(j, stats_out);
    };
  });

  std::string sample_model, sample_corpus, sample_out;
  std::size_t sample_cluster_idx = 0, sample_n = 100;
  auto* sample = cluster_cmd->add_subcommand("sample", "Draw members of one cluster as a new corpus");
  sample->add_option("--model", sample_model)->required();
  sample->add_option("--corpus", sample_corpus)->required();
  sample->add_option("--cluster", sample_cluster_idx)->required();
  sample->add_option("--n", sample_n)->check(CLI::PositiveNumber);
  sample->add_option("--out", sample_out)->required();
  sample->callback([&] {
    action = [&] {
      const auto cm = cluster_model_from_json(read_json(sample_model, "clustering"));
      const auto corpus = load_corpus(sample_corpus, std::filesystem::path(sample_corpus).stem().string());
      const auto subset = sample_cluster(cm, corpus, sample_cluster_idx, sample_n, g.seed);
      save_corpus(subset, sample_out);
      spdlog::info("wrote {} examples of cluster {} to {}", subset.size(), sample_cluster_idx, sample_out);
    };
  });

  // contamination
  auto* cont_cmd = app.add_subcommand("contamination", "Min-K% Prob membership screening")->require_subcommand(1);
  std::string cont_corpus, cont_logprobs, cont_k = "5,10,20", cont_out;
  ServiceFlags cont_svc;
  auto* cont = cont_cmd->add_subcommand("score", "Per-example and per-corpus Min-K% Prob");
  cont->add_option("--corpus", cont_corpus)->required();
  cont->add_option("--logprobs", cont_logprobs, "JSONL of {id, logprobs}, or a service URL")
      ->envname("GUARDSIM_LOGPROBS_ENDPOINT");
  cont->add_option("--k", cont_k, "Comma-separated percentages");
  cont->add_option("--out", cont_out);
  cont_svc.add(cont, "", 16);
  cont->callback([&] {
    action = [&] {
      const auto corpus = load_corpus(cont_corpus, std::filesystem::path(cont_corpus).stem().string());
      std::vector<TokenLogProbs> lp;
      std::string lp_digest;
      const bool url = cont_logprobs.rfind("http://", 0) == 0 || cont_logprobs.rfind("https://", 0) == 0;
      if (url || (cont_logprobs.empty() && !cont_svc.endpoint.empty())) {
        const auto endpoint = url ? ServiceEndpoint{cont_logprobs, g.token} : cont_svc.resolve(g, "log-probability");
        lp = fetch_logprobs(corpus, endpoint, cont_svc.options());
        lp_digest = "service:" + endpoint.base_url;
      } else {
        if (cont_logprobs.empty()) throw ValidationError("cli", "--logprobs is required");
        lp = load_logprobs(cont_logprobs);
        lp_digest = sha256_file(cont_logprobs);
      }
      auto j = to_json(contamination_report(corpus, lp, parse_ks(cont_k)));
      j["provenance"] = provenance({{"k", cont_k}}, {{"corpus", corpus.source_digest}, {"logprobs", lp_digest}});
      emit(j, cont_out);
    };
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Harmfulness and utility metrics")->require_subcommand(1);
  std::string hs_responses, hs_out;
  ServiceFlags hs_svc;
  auto* hs = eval_cmd->add_subcommand("hs", "Harmfulness Score via the moderation service");
  hs->add_option("--responses", hs_responses)->required();
  hs->add_option("--out", hs_out);
  hs_svc.add(hs, "GUARDSIM_MODERATION_ENDPOINT", 16);
  hs->callback([&] {
    action = [&] {
      const auto responses = load_responses(hs_responses, std::filesystem::path(hs_responses).stem().string());
      const auto outcome = moderate(responses, hs_svc.resolve(g, "moderation"), hs_svc.options(), g.strict);
      for (const auto& w : outcome.warnings) spdlog::warn("{}", w);
      if (outcome.verdicts.empty()) throw ServiceError("evaluation", "no item was moderated successfully");
      auto j = to_json(harmfulness_score(outcome.verdicts));
      j["failed_ids"] = outcome.failed_ids;
      j["verdicts"] = to_json(outcome.verdicts);
      j["provenance"] = provenance({{"endpoint", hs_svc.endpoint}, {"strict", g.strict}, {"batch", hs_svc.batch}},
                                   {{"responses", sha256_file(hs_responses)}});
      emit(j, hs_out);
    };
  });

  std::string rouge_cand, rouge_ref, rouge_out;
  auto* rouge = eval_cmd->add_subcommand("rouge", "Mean Rouge-1 F1 of candidates against references");
  rouge->add_option("--candidates", rouge_cand, "JSONL with response/output")->required();
  rouge->add_option("--references", rouge_ref, "JSONL with reference/output/response")->required();
  rouge->add_option("--out", rouge_out);
  rouge->callback([&] {
    action = [&] {
      const auto cands = text_column(rouge_cand, {"response", "output", "text"});
      const auto refs = text_column(rouge_ref, {"reference", "output", "response", "text"});
      Json per = Json::array();
      for (std::size_t i = 0; i < std::min(cands.size(), refs.size()); ++i) per.push_back(rouge1_f1(cands[i], refs[i]));
      Json j;
      j["kind"] = "rouge1_report";
      j["pairs"] = cands.size();
      j["mean_f1"] = mean_rouge1_f1(cands, refs);
      j["per_pair_f1"] = std::move(per);
      j["provenance"] = provenance(Json::object(), {{"candidates", sha256_file(rouge_cand)}, {"references", sha256_file(rouge_ref)}});
      emit(j, rouge_out);
    };
  });

  std::string judge_responses, judge_out;
  ServiceFlags judge_svc;
  auto* judge = eval_cmd->add_subcommand("judge", "Mean 1-10 judge score via the judge service");
  judge->add_option("--responses", judge_responses)->required();
  judge->add_option("--out", judge_out);
  judge_svc.add(judge, "GUARDSIM_JUDGE_ENDPOINT", 8);
  judge->callback([&] {
    action = [&] {
      const auto responses = load_responses(judge_responses, std::filesystem::path(judge_responses).stem().string());
      auto j = to_json(judge_utility(responses, judge_svc.resolve(g, "judge"), judge_svc.options()));
      j["provenance"] = provenance({{"endpoint", judge_svc.endpoint}, {"batch", judge_svc.batch}},
                                   {{"responses", sha256_file(judge_responses)}});
      emit(j, judge_out);
    };
  });

  // risk
  auto* risk_cmd = app.add_subcommand("risk", "Similarity-aware model selection")->require_subcommand(1);
  std::string rank_user, rank_manifest, rank_threshold = "auto", rank_out, rank_csv;
  bool rank_force = false;
  auto* rank = risk_cmd->add_subcommand("rank", "Rank candidate models by similarity to user data");
  rank->add_option("--user-emb", rank_user)->required();
  rank->add_option("--candidates", rank_manifest, "manifest.json")->required();
  rank->add_option("--threshold", rank_threshold, "'auto' (median) or a number");
  rank->add_option("--out", rank_out);
  rank->add_option("--csv", rank_csv, "Also write a CSV table");
  rank->add_flag("--force-mixed-spec", rank_force, "Compare matrices from different embedding specs");
  rank->callback([&] {
    action = [&] {
      const auto user = read_matrix(rank_user);
      const auto candidates = load_manifest(rank_manifest);
      RiskOptions opts;
      opts.strict = g.strict;
      opts.allow_mixed_specs = rank_force;
      if (rank_threshold != "auto") {
        try {
          opts.threshold = std::stod(rank_threshold);
        } catch (const std::exception&) {
          throw ValidationError("cli", "--threshold must be 'auto' or a number");
        }
      }
      const auto report = rank_models(candidates, user, opts);
      for (const auto& [id, reason] : report.excluded) spdlog::warn("candidate '{}' excluded: {}", id, reason);
      auto j = to_json(report);
      std::vector<std::pair<std::string, std::string>> inputs{{"user_matrix", user.digest},
                                                              {"manifest", sha256_file(rank_manifest)}};
      for (const auto& c : candidates) inputs.emplace_back("candidate:" + c.model_id, c.alignment.digest);
      j["provenance"] = provenance({{"threshold", rank_threshold}, {"strict", g.strict}, {"force_mixed_spec", rank_force}}, inputs);
      emit(j, rank_out);
      if (!rank_csv.empty()) write_file_bytes(rank_csv, risk_csv(report), "risk");
    };
  });

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "End-to-end selection run")->require_subcommand(1);
  PipelineConfig pc;
  std::string pc_align_emb, pc_down_emb, pc_align_corpus, pc_down_corpus, pc_out, pc_mode = "averaged",
      pc_candidates, pc_logprobs, pc_k = "5,10,20", pc_threshold = "auto", pc_model = "uncensored-chat";
  std::size_t pc_cluster_k = 0;
  ServiceFlags pc_svc;
  auto* run = pipe_cmd->add_subcommand("run", "embed -> score -> select, plus optional cluster/contamination/risk");
  run->add_option("--align-emb", pc_align_emb);
  run->add_option("--down-emb", pc_down_emb);
  run->add_option("--align-corpus", pc_align_corpus);
  run->add_option("--down-corpus", pc_down_corpus);
  run->add_option("--model-id", pc_model);
  run->add_option("--n", pc.n)->required()->check(CLI::PositiveNumber);
  run->add_option("--mode", pc_mode)->check(CLI::IsMember({"averaged", "per_query"}));
  run->add_option("--cluster-k", pc_cluster_k, "Also fit k-means with this k");
  run->add_option("--logprobs", pc_logprobs, "Also screen contamination (JSONL or URL)");
  run->add_option("--k", pc_k, "Min-K% thresholds");
  run->add_option("--candidates", pc_candidates, "Also rank candidate models (manifest.json)");
  run->add_option("--threshold", pc_threshold);
  run->add_option("--out-dir", pc_out)->required();
  pc_svc.add(run, "GUARDSIM_EMBED_ENDPOINT", 32);
  run->callback([&] {
    action = [&] {
      pc.out_dir = pc_out;
      if (!pc_align_emb.empty()) pc.align_emb = pc_align_emb;
      if (!pc_down_emb.empty()) pc.down_emb = pc_down_emb;
      if (!pc_align_corpus.empty()) pc.align_corpus = pc_align_corpus;
      if (!pc_down_corpus.empty()) pc.down_corpus = pc_down_corpus;
      if (!pc_svc.endpoint.empty()) pc.embed_endpoint = ServiceEndpoint{pc_svc.endpoint, g.token};
      pc.spec.model_id = pc_model;
      pc.client = pc_svc.options();
      pc.seed = g.seed;
      pc.mode = parse_selection_mode(pc_mode);
      if (pc_cluster_k > 0) pc.cluster_k = pc_cluster_k;
      if (!pc_logprobs.empty()) pc.logprobs = pc_logprobs;
      pc.ks = parse_ks(pc_k);
      if (!pc_candidates.empty()) pc.candidates = pc_candidates;
      if (pc_threshold != "auto") pc.risk_threshold = std::stod(pc_threshold);
      pc.strict = g.strict;
      const auto result = run_pipeline(pc);
      for (const auto& w : result.warnings) spdlog::warn("{}", w);
      spdlog::info("selected {} / {} / {} ids (high/low/random); artifacts in {}", result.selection.high_ids.size(),
                   result.selection.low_ids.size(), result.selection.random_ids.size(), pc_out);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::validation);
  }

  try {
    spdlog::set_level(parse_level(g.log_level));
    if (action) action();
    return 0;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("io: {}", e.what());
    return static_cast<int>(ErrorKind::io);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(ErrorKind::validation);
  }
}
