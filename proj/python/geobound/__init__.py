"""Expansion-rate bounds for geodesic congruences on negatively curved manifolds."""

from ._core import (
    GeoboundError,
    bg_log_slope,
    bg_volume,
    bounds,
    lemma_check,
    list_metrics,
    metric,
    metric_components,
    oracle,
    run_cli,
    shear_trace_bounds_check,
    shuffle_convergence,
    simulate,
    sn,
    solve_jacobi,
    strategy_functional,
    tidal,
)

__all__ = [
    "GeoboundError",
    "bg_log_slope",
    "bg_volume",
    "bounds",
    "lemma_check",
    "list_metrics",
    "metric",
    "metric_components",
    "oracle",
    "run_cli",
    "shear_trace_bounds_check",
    "shuffle_convergence",
    "simulate",
    "sn",
    "solve_jacobi",
    "strategy_functional",
    "tidal",
]
