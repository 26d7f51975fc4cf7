"""Hypernymy discovery over text-rich heterogeneous information networks."""

import json as _json

from ._hypermine import (
    Context,
    Corpus,
    Embeddings,
    Error,
    Graph,
    Model,
    PairwiseFeatures,
    ParseError,
    SeedPairSet,
    SynthConfig,
    SynthDataset,
    TrainConfig,
    ValidationError,
    Vocabulary,
    __version__,
    build_cluster,
    build_context,
    build_group_by,
    build_simplest,
    build_taxonomy,
    compute_pairwise_features,
    dih_measures,
    evaluate_json,
    extract_seed_pairs,
    generate_synthetic,
    order_by_score,
    precision_at_k,
    rank_pairs,
    reciprocal_rank_metrics,
    run_pipeline,
    stage_names,
    train,
    train_embedding,
)


def evaluate(ranked, labels, ks=(100, 1000), tie_seed=0):
    """P@k and reciprocal-rank metrics as a dict (same content as metrics.json)."""
    return _json.loads(evaluate_json(ranked, labels, list(ks), tie_seed))
