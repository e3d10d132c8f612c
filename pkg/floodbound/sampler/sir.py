"""
Sampling-importance-resampling from the B2-implied distribution with a Bernstein proposal.

Proposal: exceedances t' >= 0 with survival S_Ber(t') = exp[-t'^2 / (2 (n v + c t'/3))],
drawn in closed form. Target: S_BS(t') = exp{n B(l) - l t'} with l = l*(t'/n).

Weights w* = f_BS / q are formed in log space, normalised and resampled by
residual resampling; sorting plus one shared permutation couples the two tails
replicate-wise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from floodbound.bounds.inequalities import lambda_star_arrays, mgf_b
from floodbound.bounds.special import f_k
from floodbound.config.defaults import ESS_WARN_FRACTION, STREAM_SIR_LOWER, STREAM_SIR_UPPER
from floodbound.errors import ConfigError, NumericalError
from floodbound.params.dataclasses import B2, BoundFamily, SummandStats, YearSummary
from floodbound.simulation.rng import substream


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightedSample:
    """Proposed totals of one year and tail with raw and normalised importance weights."""

    year: int
    tail: str
    positions: np.ndarray
    exceedances: np.ndarray
    raw_weights: np.ndarray
    weights: np.ndarray

    @property
    def M(self) -> int:
        return int(self.positions.shape[0])

    @property
    def ess(self) -> float:
        """Effective sample size M / (1 + cv^2) of the raw weights."""
        w = self.raw_weights
        total = float(np.sum(w))
        if total <= 0.0:
            return 0.0
        return total**2 / float(np.sum(w * w))


# ---------------------------------------------------------------------
# Proposal and target densities (summed scale t' = n t)
# ---------------------------------------------------------------------

def bernstein_exceedance(u, n: int, vbar: float, cstar: float):
    """Solve S_Ber(t') = u for t' (u in (0, 1])."""
    log_u = np.log(np.asarray(u, dtype=float))
    a = cstar * log_u / 3.0
    return np.sqrt(a * a - 2.0 * n * vbar * log_u) - a


def proposal_log_density(tprime, stats: SummandStats) -> np.ndarray:
    tp = np.asarray(tprime, dtype=float)
    nv = stats.n * stats.vbar
    c = stats.cstar
    with np.errstate(divide="ignore"):
        return (
            np.log(nv + c * tp / 6.0)
            + np.log(tp)
            - 2.0 * np.log(nv + c * tp / 3.0)
            - 0.5 * tp**2 / (nv + c * tp / 3.0)
        )


def target_log_survival(tprime, stats: SummandStats) -> np.ndarray:
    """log S_BS(t') = n B2(t'/n)."""
    tp = np.asarray(tprime, dtype=float)
    lam, _ = lambda_star_arrays(tp / stats.n, stats.vbar, stats.K, stats.cstar)
    return np.minimum(stats.n * mgf_b(lam, stats.vbar, stats.K, stats.K1, stats.cstar) - lam * tp, 0.0)


def _target_log_density_parts(tprime, stats: SummandStats) -> Tuple[np.ndarray, np.ndarray]:
    tp = np.asarray(tprime, dtype=float)
    n, v, K, K1, c = stats.n, stats.vbar, stats.K, stats.K1, stats.cstar
    lam, curvature = lambda_star_arrays(tp / n, v, K, c)
    log_s = np.minimum(n * mgf_b(lam, v, K, K1, c) - lam * tp, 0.0)
    # -(d/dt') log S_BS = l - (n B'(l) - t') dl/dt' = l + K1 c^2 l^3 f_3(l c) / B''(l; K, 0)
    with np.errstate(over="ignore", invalid="ignore"):
        correction = K1 * c**2 * lam**3 * f_k(lam * c, 3) / curvature if K1 > 0.0 else 0.0
        hazard = lam + correction
    return hazard, log_s


def target_density(tprime, stats: SummandStats) -> np.ndarray:
    """f_BS(t') = -dS_BS/dt'."""
    hazard, log_s = _target_log_density_parts(tprime, stats)
    return hazard * np.exp(log_s)


def target_log_density(tprime, stats: SummandStats) -> np.ndarray:
    hazard, log_s = _target_log_density_parts(tprime, stats)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(hazard) + log_s


# ---------------------------------------------------------------------
# Proposals, weights, resampling
# ---------------------------------------------------------------------

def _position(summary: YearSummary, tail: str, tprime: np.ndarray) -> np.ndarray:
    if tail == "upper":
        return summary.expected_total + tprime
    return np.maximum(summary.expected_total - tprime, 0.0)


def bernstein_propose(
    summary: YearSummary,
    rng: np.random.Generator,
    M: int,
    tail: str = "upper",
) -> WeightedSample:
    """M closed-form Bernstein proposals, equally weighted."""
    if M < 1:
        raise ValueError("M must be >= 1")
    stats = summary.stats(tail)
    u = 1.0 - rng.random(M)  # (0, 1]
    if stats is None or stats.vbar == 0.0:
        tprime = np.zeros(M)
    else:
        tprime = bernstein_exceedance(u, stats.n, stats.vbar, stats.cstar)
    ones = np.ones(M)
    return WeightedSample(
        year=summary.year,
        tail=tail,
        positions=_position(summary, tail, tprime),
        exceedances=tprime,
        raw_weights=ones,
        weights=ones / M,
    )


def importance_weights(
    summary: YearSummary,
    sample: WeightedSample,
    family: BoundFamily = B2,
) -> WeightedSample:
    """
    Weights w* = f(t') / q(t') for the proposals in ``sample``.

    ``family`` is B2 for sampling; ``bernstein`` gives target = proposal (all w* = 1).
    """
    if family.tag not in ("B2", "bernstein"):
        raise ConfigError(f"importance weights are only available for B2 (got {family})")
    stats = summary.stats(sample.tail)
    tp = sample.exceedances
    M = sample.M

    if stats is None or stats.vbar == 0.0:
        raw = np.ones(M)
    else:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            log_q = proposal_log_density(tp, stats)
            log_f = log_q if family.tag == "bernstein" else target_log_density(tp, stats)
            raw = np.where(tp > 0.0, np.exp(log_f - log_q), 1.0)

    bad = ~np.isfinite(raw) | (raw < 0.0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NumericalError(
            f"year {summary.year} ({sample.tail} tail): nonfinite importance weight at t'={tp[i]!r}"
        )
    total = float(np.sum(raw))
    if not total > 0.0:
        raise NumericalError(f"year {summary.year} ({sample.tail} tail): all importance weights vanish")

    return WeightedSample(
        year=sample.year,
        tail=sample.tail,
        positions=sample.positions,
        exceedances=tp,
        raw_weights=raw,
        weights=raw / total,
    )


def residual_resample_indices(weights: np.ndarray, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """
    Residual resampling: floor(M w_i) deterministic copies, the rest multinomial on the residuals.

    Returns ``size`` (default len(weights)) indices grouped by source item.
    """
    w = np.asarray(weights, dtype=float)
    M = w.size if size is None else int(size)

    mw = M * w
    copies = np.floor(mw)
    # M * (1/M) can land just below 1
    copies = np.where(mw - copies > 1.0 - 1e-9, copies + 1.0, copies).astype(np.int64)
    n_rest = M - int(np.sum(copies))

    idx = np.repeat(np.arange(w.size), copies)
    if n_rest > 0:
        residual = np.maximum(mw - copies, 0.0)
        if not np.sum(residual) > 0.0:
            residual = w.copy()
        cumulative = np.cumsum(residual / np.sum(residual))
        cumulative[-1] = 1.0
        extra = np.searchsorted(cumulative, rng.random(n_rest), side="right")
        idx = np.concatenate([idx, np.minimum(extra, w.size - 1)])
    return idx


def residual_resample(ws: WeightedSample, rng: np.random.Generator) -> np.ndarray:
    """M resampled positions (unsorted)."""
    return ws.positions[residual_resample_indices(ws.weights, rng)]


# ---------------------------------------------------------------------
# Per-year SIR
# ---------------------------------------------------------------------

def sir_tail(summary: YearSummary, tail: str, M: int, rng: np.random.Generator) -> Tuple[np.ndarray, float]:
    """Sorted M-sample of one tail and the effective sample size of its weights."""
    proposal = bernstein_propose(summary, rng, M, tail=tail)
    weighted = importance_weights(summary, proposal, B2)
    ess = weighted.ess
    if ess < ESS_WARN_FRACTION * M:
        logger.warning(
            "year %d (%s tail): effective sample size %.1f below %.0f%% of M=%d",
            summary.year, tail, ess, 100 * ESS_WARN_FRACTION, M,
        )
    return np.sort(residual_resample(weighted, rng)), ess


def sir_year(summary: YearSummary, M: int, seed: int) -> Tuple[np.ndarray, np.ndarray, float, float]:
    """
    Coupled SIR samples (s-, s+) of one year.

    Both tails are sorted and then permuted by one permutation drawn from the
    upper-tail stream, so s-[m] <= s+[m] for every replicate m.
    """
    if summary.degenerate:
        zeros = np.zeros(M)
        return zeros, zeros.copy(), float(M), float(M)

    rng_up = substream(seed, STREAM_SIR_UPPER, summary.year)
    rng_lo = substream(seed, STREAM_SIR_LOWER, summary.year)
    upper, ess_up = sir_tail(summary, "upper", M, rng_up)
    lower, ess_lo = sir_tail(summary, "lower", M, rng_lo)
    perm = rng_up.permutation(M)
    logger.debug("year %d: ESS lower %.1f, upper %.1f (M=%d)", summary.year, ess_lo, ess_up, M)
    return lower[perm], upper[perm], ess_lo, ess_up
