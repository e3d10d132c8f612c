"""
Year diagnostics and bound curves.

Representative years A-D, the per-year summary table, simulated centred totals with
their skewness, and log tail-probability curves of the bound families next to a
Monte Carlo reference band.
"""

from __future__ import annotations

import logging
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats as sps

from floodbound.analysis.returns import type1_quantile
from floodbound.bounds.inequalities import b1_log_bound, log_bound
from floodbound.bounds.optimize import bisect_decreasing
from floodbound.config.defaults import (
    DEFAULT_CURVE_B1_FLOOR,
    DEFAULT_CURVE_POINTS,
    DEFAULT_MC_BAND_DRAWS,
    DEFAULT_MC_BAND_LEVEL,
    STREAM_CURVE_MC,
)
from floodbound.errors import ConfigError, NumericalError
from floodbound.params.dataclasses import BoundFamily, EventTable, SummandStats, YearSummary
from floodbound.simulation.rng import substream
from floodbound.simulation.standard import YearTerms, simulate_year_standard


logger = logging.getLogger(__name__)

YEAR_TABLE_COLUMNS = ("year", "n_ev", "expected_total", "n_p_gt_0", "p_bar", "mu_bar", "selection")
SELECTION_QUANTILES = {"A": 0.25, "B": 0.5, "C": 0.75, "D": 1.0}


def select_representative_years(summaries: Sequence[YearSummary]) -> Dict[str, int]:
    """
    Years at the lower quartile (A), median (B), upper quartile (C) and maximum (D)
    of the expected yearly loss.

    Type-1 quantiles always hit an observed value; ties go to the lowest year.
    """
    if not summaries:
        return {}
    years = np.array([s.year for s in summaries], dtype=np.int64)
    expected = np.array([s.expected_total for s in summaries], dtype=float)
    out = {}
    for label, q in SELECTION_QUANTILES.items():
        value = type1_quantile(expected, q)
        out[label] = int(np.min(years[expected == value]))
    return out


def year_table(summaries: Sequence[YearSummary]) -> pd.DataFrame:
    """Descriptive statistics per year with the A/B/C/D selection flags."""
    chosen: Dict[int, str] = {}
    for label, y in select_representative_years(summaries).items():
        chosen[y] = chosen.get(y, "") + label
    rows = [
        (s.year, s.n_ev, s.expected_total, s.n_p_gt_0, s.p_bar, s.mu_bar, chosen.get(s.year, ""))
        for s in summaries
    ]
    return pd.DataFrame(rows, columns=list(YEAR_TABLE_COLUMNS))


def simulate_centred_totals(
    year_events: EventTable,
    expected_total: float,
    n_draws: int = DEFAULT_MC_BAND_DRAWS,
    seed: int = 0,
    year: int = 0,
) -> np.ndarray:
    """Standard-method draws of S = T - E[T] for one year (stream keyed by year)."""
    terms = YearTerms.from_table(year_events)
    rng = substream(seed, STREAM_CURVE_MC, year)
    totals = np.fromiter(
        (simulate_year_standard(terms, rng) for _ in range(n_draws)), dtype=float, count=n_draws
    )
    return totals - expected_total


def skewness_diagnostic(centred: np.ndarray) -> Dict[str, float]:
    """Sample mean, sd and skewness of simulated centred totals."""
    x = np.asarray(centred, dtype=float)
    sd = float(np.std(x, ddof=1)) if x.size > 1 else float("nan")
    skew = float(sps.skew(x, bias=False)) if x.size > 2 and sd > 0.0 else float("nan")
    return {"mc_mean": float(np.mean(x)), "mc_sd": sd, "skewness": skew}


def default_t_grid(
    stats: SummandStats,
    n_t: int = DEFAULT_CURVE_POINTS,
    floor: float = DEFAULT_CURVE_B1_FLOOR,
) -> np.ndarray:
    """
    n_t points from 0 to the t at which the B1 bound reaches ``floor``.
    """
    if n_t < 2:
        raise ConfigError("n_t must be >= 2")
    if not floor < 0.0:
        raise ConfigError("floor must be < 0")
    if stats.vbar == 0.0:
        raise NumericalError("no variance: bound curves are degenerate")
    t_end, converged = bisect_decreasing(
        lambda t: b1_log_bound(t, stats),
        np.array([floor]),
        np.array([np.sqrt(stats.vbar)]),
        rtol=1e-6,
    )
    if not converged[0]:
        raise NumericalError("could not locate the end of the default t-grid")
    return np.linspace(0.0, float(t_end[0]), n_t)


def bound_curve(
    stats: SummandStats,
    families: Sequence[BoundFamily],
    t_grid: Optional[np.ndarray] = None,
    scale: float = 1.0,
) -> pd.DataFrame:
    """
    Long table ``t,family,log_prob_bound`` of scale * (1/n) log-bounds over a t-grid.

    The same call serves the lower tail when given the lower-tail summaries; t is then
    the per-summand shortfall below the mean.
    """
    t = default_t_grid(stats) if t_grid is None else np.asarray(t_grid, dtype=float)
    frames = []
    for fam in families:
        fam = BoundFamily.parse(fam) if isinstance(fam, str) else fam
        values = np.atleast_1d(log_bound(fam, t, stats))
        frames.append(pd.DataFrame({"t": t, "family": fam.name, "log_prob_bound": scale * values}))
    return pd.concat(frames, ignore_index=True)


def mc_reference_band(
    centred: np.ndarray,
    n: int,
    t_grid: np.ndarray,
    tail: str = "upper",
    level: float = DEFAULT_MC_BAND_LEVEL,
    scale: float = 1.0,
) -> pd.DataFrame:
    """
    Empirical scale * (1/n) log P(S >= n t) (upper) or P(S <= -n t) (lower)
    with a Wilson interval at ``level``.

    Returns columns ``t, mc_estimate, mc_lo, mc_hi``; zero counts give -inf.
    """
    x = np.asarray(centred, dtype=float)
    N = x.size
    if N < 1:
        raise ConfigError("need at least one Monte Carlo draw")
    rows = []
    for t in np.asarray(t_grid, dtype=float):
        hits = int(np.sum(x >= n * t)) if tail == "upper" else int(np.sum(x <= -n * t))
        ci = sps.binomtest(hits, N).proportion_ci(confidence_level=level, method="wilson")
        with np.errstate(divide="ignore"):
            est, lo, hi = np.log([hits / N, ci.low, ci.high]) * scale / n
        rows.append((t, est, lo, hi))
    return pd.DataFrame(rows, columns=["t", "mc_estimate", "mc_lo", "mc_hi"])
