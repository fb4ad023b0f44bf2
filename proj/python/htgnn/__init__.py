"""Python bindings for the htgnn rating-prediction library."""

import json

from ._htgnn import (
    ValidationError,
    bucket_ratings,
    classification_metrics,
    cosine_distance_matrix,
    generate_synthetic,
    homophily_ratio,
    infer_loan_matrix,
    load_quarter,
    load_rating_mapping,
    min_support,
    paired_t_test,
    persistence_diagram,
    persistence_edges,
)
from ._htgnn import run_experiment as _run_experiment

__all__ = [
    "ValidationError",
    "bucket_ratings",
    "classification_metrics",
    "cosine_distance_matrix",
    "generate_synthetic",
    "homophily_ratio",
    "infer_loan_matrix",
    "load_quarter",
    "load_rating_mapping",
    "min_support",
    "paired_t_test",
    "persistence_diagram",
    "persistence_edges",
    "run_experiment",
]


def run_experiment(config=None, quarters=(), synthetic_banks=None, output_dir=""):
    """Run all model variants and return the report as a dict.

    `config` is a dict with the experiment config keys. Without `quarters`
    a synthetic market of `synthetic_banks` banks is generated per repeat.
    Artifacts are written only when `output_dir` is given.
    """
    return _run_experiment(json.dumps(config or {}), [str(q) for q in quarters], synthetic_banks, str(output_dir))
