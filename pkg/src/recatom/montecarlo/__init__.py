"""Reproducible Monte-Carlo experiments and their estimators."""

from .config import KINDS, ConfigError, ExperimentConfig, Report, ScalarResult, Threshold, parse_dist
from .estimators import (
    coverage_estimate,
    empirical_pmf,
    exact_be_supdist,
    ks_statistic,
    tv_distance,
)
from .runner import run_experiment
from .seeding import derive_seed, replicate_rng

__all__ = [
    "KINDS",
    "ConfigError",
    "ExperimentConfig",
    "Report",
    "ScalarResult",
    "Threshold",
    "parse_dist",
    "coverage_estimate",
    "empirical_pmf",
    "exact_be_supdist",
    "ks_statistic",
    "tv_distance",
    "run_experiment",
    "derive_seed",
    "replicate_rng",
]
