"""Representation-similarity tooling for safety-alignment data curation."""

from ._core import (
    Corpus,
    ClusterModel,
    ClusterReport,
    EmbeddingMatrix,
    Example,
    GuardsimError,
    IoError,
    SelectionResult,
    ServiceError,
    SimilarityScores,
    StubService,
    ValidationError,
    aggregate_similarity,
    cluster_stats,
    contamination_report,
    cosine,
    fetch_embeddings,
    format_percent,
    harmfulness_score,
    injection_count,
    kmeans,
    load_corpus,
    min_k_prob,
    mix_corpora,
    rank_models,
    read_matrix,
    rouge1_f1,
    rouge_tokens,
    run_pipeline,
    sample_cluster,
    save_corpus,
    score_alignment,
    select_per_query,
    select_subsets,
    write_matrix,
)

__version__ = "0.1.0"
