"""Generative models and the coverage-experiment engine."""

from evalbars.simharness.config import (
    DEFAULT_LEVELS,
    PROFILES,
    SETTINGS,
    SimConfig,
    format_config,
    load_config,
    logit_levels,
    parse_config_text,
    parse_levels,
)
from evalbars.simharness.engine import generate, resolve_methods, run_coverage_experiment, true_value
from evalbars.simharness.exact import exact_coverage, prior_averaged_coverage
from evalbars.simharness.generators import cluster_sizes_for, gen_clustered, gen_confusion, gen_iid, gen_paired
from evalbars.simharness.methods import MATCHED_BAYES, REGISTRY, MethodSpec, TaskContext, default_methods
from evalbars.simharness.priors import Prior
from evalbars.simharness.report import CSV_HEADER, CoverageReport, CoverageRow, coverage_error

__all__ = [
    "CSV_HEADER",
    "CoverageReport",
    "CoverageRow",
    "DEFAULT_LEVELS",
    "MATCHED_BAYES",
    "MethodSpec",
    "PROFILES",
    "Prior",
    "REGISTRY",
    "SETTINGS",
    "SimConfig",
    "TaskContext",
    "cluster_sizes_for",
    "coverage_error",
    "default_methods",
    "exact_coverage",
    "format_config",
    "gen_clustered",
    "gen_confusion",
    "gen_iid",
    "gen_paired",
    "generate",
    "load_config",
    "logit_levels",
    "parse_config_text",
    "parse_levels",
    "prior_averaged_coverage",
    "resolve_methods",
    "run_coverage_experiment",
    "true_value",
]
