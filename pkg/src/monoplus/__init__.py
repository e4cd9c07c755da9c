"""Rectangular monotone min-plus product: randomised algorithm, oracle, and exponent calculator."""

from monoplus.core import AlgoParams, FallbackToNaive, MonotoneResult, RunStats, choose_params, minplus_monotone, solve
from monoplus.exponents import DEFAULT_MODEL, ExponentModel, load_model, omega_of
from monoplus.matrices import INF, InstanceMeta, naive_minplus, parse_matrix, format_matrix

__all__ = [
    "AlgoParams",
    "DEFAULT_MODEL",
    "ExponentModel",
    "FallbackToNaive",
    "INF",
    "InstanceMeta",
    "MonotoneResult",
    "RunStats",
    "choose_params",
    "format_matrix",
    "load_model",
    "minplus_monotone",
    "naive_minplus",
    "omega_of",
    "parse_matrix",
    "solve",
]
