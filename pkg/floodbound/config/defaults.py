"""
Default configuration values for bound evaluation and conservative sampling.

This module centralizes numerical and run-level defaults used across the
library, the CLI and the companion scripts, so that every entry point agrees
on tolerances, return periods and scenario settings.
"""

from __future__ import annotations

from typing import Dict, Tuple

from floodbound.params.dataclasses import SolverConfig


# ---------------------------------------------------------------------
# Numerical kernel defaults
# ---------------------------------------------------------------------

DEFAULT_SOLVER_CONFIG = SolverConfig(
    fk_switch=0.5,               # |u| below which f_k uses its power series
    series_rtol=1e-17,           # series truncation, relative to the partial sum
    lambda_tol=1e-10,            # golden-section tolerance, relative to the lambda bracket
    lambert_max_iter=10,         # Halley iterations for W
    inversion_rtol=1e-10,        # bisection tolerance on s
    inversion_max_doublings=200, # bracket growth cap
    inversion_max_bisections=400,
)

# Beta laws with alpha + beta at or above this are sampled as a point mass at mu.
POINT_MASS_CONCENTRATION = 1e8

# Effective sample size below this fraction of M is logged as a warning.
ESS_WARN_FRACTION = 0.2

# aggregate() warns when fewer replicates are available.
MIN_REPLICATES_FOR_INTERVALS = 40

# Families whose survival function can be inverted directly.
DIRECT_FAMILIES = ("bennett", "B1", "B2", "B3", "bernstein")


# ---------------------------------------------------------------------
# Return levels and bounds
# ---------------------------------------------------------------------

DEFAULT_RETURN_PERIODS: Tuple[int, ...] = (2, 5, 10, 20, 50, 100, 200, 500)
DEFAULT_BOOTSTRAP_B = 200
DEFAULT_CURVE_POINTS = 50
DEFAULT_CURVE_B1_FLOOR = -0.025  # default t-grid ends where B1 reaches this value
DEFAULT_MC_BAND_DRAWS = 20_000
DEFAULT_MC_BAND_LEVEL = 0.90


# ---------------------------------------------------------------------
# Sensitivity study
# ---------------------------------------------------------------------

MU_CAP = 0.95

DEFAULT_SCENARIO_DELTA: Dict[str, float] = {
    "P0": 0.0,
    "P1": 0.05,
    "P2": 0.05,
    "P3": 0.05,
    "P4": 0.25,
}

DEFAULT_SCENARIO_R = 100


# ---------------------------------------------------------------------
# Random-number stream tags
# ---------------------------------------------------------------------

STREAM_STANDARD = 0
STREAM_DIRECT = 1
STREAM_SIR_UPPER = 2
STREAM_SIR_LOWER = 3
STREAM_PERTURBATION = 4
STREAM_BOOTSTRAP = 5
STREAM_TOY = 6
STREAM_CURVE_MC = 7
STREAM_REPORT_BOOTSTRAP = 8


# ---------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------

WORKERS_ENV_VAR = "FLOODBOUND_WORKERS"


# ---------------------------------------------------------------------
# Helper accessors
# ---------------------------------------------------------------------

def get_default_solver_config() -> SolverConfig:
    """Return the default solver configuration."""
    return DEFAULT_SOLVER_CONFIG
