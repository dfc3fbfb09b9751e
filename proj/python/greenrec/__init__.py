"""Downsampling experiments for recommender systems."""

from ._core import (
    ConfigError,
    ParseError,
    UnsupportedCombination,
    __version__,
    co2e_savings_kg,
    dataset_stats,
    load_results,
    ndcg_at_k,
    preprocess,
    relative_performance,
    report,
    run_experiment,
    runtime_profile,
)

__all__ = [
    "ConfigError",
    "ParseError",
    "UnsupportedCombination",
    "__version__",
    "co2e_savings_kg",
    "dataset_stats",
    "load_results",
    "ndcg_at_k",
    "preprocess",
    "relative_performance",
    "report",
    "run_experiment",
    "runtime_profile",
]
