"""Similarity-weighted graph contrastive learning."""

from ._core import (
    ConfigError,
    InputError,
    NumericalError,
    default_config,
    enhanced_loss,
    gen_sbm,
    infonce,
    linear_probe,
    make_split,
    negative_weights,
    normalized_adjacency,
    positive_weights,
    ppr_exact,
    ppr_iterative,
    run_experiment,
    similarity,
    train_grace,
)

__all__ = [
    "ConfigError",
    "InputError",
    "NumericalError",
    "default_config",
    "enhanced_loss",
    "gen_sbm",
    "infonce",
    "linear_probe",
    "make_split",
    "negative_weights",
    "normalized_adjacency",
    "positive_weights",
    "ppr_exact",
    "ppr_iterative",
    "run_experiment",
    "similarity",
    "train_grace",
]
