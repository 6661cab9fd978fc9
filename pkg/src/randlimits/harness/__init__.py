"""Declarative Monte Carlo experiments with deterministic seeding."""

from .config import Comparison, ConfigError, ExperimentSpec, load_spec, loads_spec, parse_spec
from .runner import ComparisonRecord, Report, emit_report, format_report, run_experiment, simulate
from .seeding import block_rng, block_seed, splitmix64
from .stats import KS, Absolute, AtLeast, AtMost, BinomialCI, compare_distribution

__all__ = [
    "Absolute", "AtLeast", "AtMost", "BinomialCI", "Comparison", "ComparisonRecord",
    "ConfigError", "ExperimentSpec", "KS", "Report", "block_rng", "block_seed",
    "compare_distribution", "emit_report", "format_report", "load_spec", "loads_spec",
    "parse_spec", "run_experiment", "simulate", "splitmix64",
]
