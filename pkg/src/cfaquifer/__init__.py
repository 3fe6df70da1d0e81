"""Caputo-Fabrizio space-time fractional groundwater flow in a confined radial aquifer."""

from .cf_calculus import (
    FractionalOrder,
    SampledFunction,
    WeightTables,
    build_weight_tables,
    cf_space_laplacian,
    cf_time_derivative,
    cf_time_integral,
    erf_fn,
    gamma_fn,
)
from .config import DEFAULTS, ConfigError, RunConfig, load_config, parse_config
from .picard import contraction_check, kernel_k, lipschitz_estimate, solve_picard, uniqueness_check
from .scheme import AquiferParams, Grid, HeadField, SolverError, classical_solve, run_simulation
from .stability import mode_amplification, parseval_check, perturbation_experiment

__version__ = "0.1.0"

__all__ = [
    "AquiferParams",
    "ConfigError",
    "DEFAULTS",
    "FractionalOrder",
    "Grid",
    "HeadField",
    "RunConfig",
    "SampledFunction",
    "SolverError",
    "WeightTables",
    "build_weight_tables",
    "cf_space_laplacian",
    "cf_time_derivative",
    "cf_time_integral",
    "classical_solve",
    "contraction_check",
    "erf_fn",
    "gamma_fn",
    "kernel_k",
    "lipschitz_estimate",
    "load_config",
    "mode_amplification",
    "parse_config",
    "parseval_check",
    "perturbation_experiment",
    "run_simulation",
    "solve_picard",
    "uniqueness_check",
]
