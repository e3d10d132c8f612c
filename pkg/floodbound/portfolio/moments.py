"""
Per-term moments and per-year summaries of the centred subrisk summands.

A wet subrisk loses exposure * Z with Z ~ Beta(alpha, beta); a dry one loses 0.
The centred summand X = exposure * (Z 1{wet} - p mu) is supported on
[-exposure p mu, exposure (1 - p mu)].
"""

from __future__ import annotations

import logging
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from floodbound.params.dataclasses import EventTable, LossTerm, SummandStats, TermMoments, YearSummary


logger = logging.getLogger(__name__)


def _moment_arrays(p, alpha, beta, exposure):
    p = np.asarray(p, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    exposure = np.asarray(exposure, dtype=float)

    conc = alpha + beta
    mu = alpha / conc
    var_beta = alpha * beta / (conc**2 * (conc + 1.0))
    pm = p * mu

    mean = exposure * pm
    variance = exposure**2 * np.maximum(p * (var_beta + mu**2) - pm**2, 0.0)
    return mean, variance, exposure * (1.0 - pm), exposure * pm


def term_moments(term: Union[LossTerm, EventTable]) -> TermMoments:
    """
    Mean, variance and support bounds of the per-subrisk summand.

    Accepts a single LossTerm (scalar fields) or an EventTable (array fields).
    """
    mean, variance, c_upper, c_lower = _moment_arrays(term.p, term.alpha, term.beta, term.exposure)
    if isinstance(term, LossTerm):
        return TermMoments(
            mean=float(mean),
            variance=float(variance),
            c_upper=float(c_upper),
            c_lower=float(c_lower),
            a_lower=-float(c_lower),
        )
    return TermMoments(mean=mean, variance=variance, c_upper=c_upper, c_lower=c_lower, a_lower=-c_lower)


def _tail_stats(n: int, weights, variance, c, mean_sq_range: float, higher_order: Optional[int]) -> SummandStats:
    cstar = float(np.max(c))
    ratio = c / cstar
    wv = weights * variance

    vbar = float(np.sum(wv) / n)
    K = min(float(np.sum(wv * ratio) / n), vbar)
    K1 = min(max(float(np.sum(wv * ratio * (1.0 - ratio)) / n), 0.0), K)

    kj: List[float] = []
    prev = K1
    if higher_order is not None and higher_order > 1:
        for j in range(2, higher_order + 1):
            val = float(np.sum(wv * ratio * (1.0 - ratio**j)) / n)
            val = min(max(val, prev), K)
            kj.append(val)
            prev = val

    return SummandStats(
        n=n,
        vbar=vbar,
        K=K,
        K1=K1,
        cstar=cstar,
        Kj=tuple(kj),
        mean_sq_range=mean_sq_range,
    )


def year_summary(
    terms: Union[EventTable, Sequence[LossTerm]],
    year: Optional[int] = None,
    higher_order: Optional[int] = None,
) -> YearSummary:
    """
    Aggregate the terms of one year into upper- and lower-tail summaries.

    Parameters
    ----------
    terms : EventTable or sequence of LossTerm
        All rows of one year.
    year : int, optional
        Year index; taken from the rows when omitted.
    higher_order : int, optional
        Also compute K_2..K_J for J = higher_order.

    Returns
    -------
    YearSummary
        Terms with p = 0 are excluded; a year with no remaining terms is degenerate.
    """
    table = terms if isinstance(terms, EventTable) else EventTable.from_terms(list(terms))

    if len(table) and np.unique(table.year).size > 1:
        raise ValueError("year_summary expects the terms of a single year")
    if year is None:
        year = int(table.year[0]) if len(table) else 0

    n_ev = int(np.unique(table.event).size)
    keep = table.p > 0.0
    if not np.any(keep):
        return YearSummary(year=int(year), n=0, expected_total=0.0, upper=None, lower=None, n_ev=n_ev)

    t = table.take(np.flatnonzero(keep))
    weights = t.n_sub.astype(float)
    n = int(np.sum(t.n_sub))

    mean, variance, c_upper, c_lower = _moment_arrays(t.p, t.alpha, t.beta, t.exposure)
    mean_sq_range = float(np.sum(weights * t.exposure**2) / n)

    upper = _tail_stats(n, weights, variance, c_upper, mean_sq_range, higher_order)
    lower = None
    if np.max(c_lower) > 0.0:
        lower = _tail_stats(n, weights, variance, c_lower, mean_sq_range, higher_order)

    mu = t.alpha / (t.alpha + t.beta)
    return YearSummary(
        year=int(year),
        n=n,
        expected_total=float(np.sum(weights * mean)),
        upper=upper,
        lower=lower,
        n_ev=n_ev,
        n_p_gt_0=n,
        p_bar=float(np.sum(weights * t.p) / n),
        mu_bar=float(np.sum(weights * mu) / n),
    )


def summarize_years(
    table: EventTable,
    years: Optional[Iterable[int]] = None,
    higher_order: Optional[int] = None,
) -> List[YearSummary]:
    """Year summaries for every requested year (default: the years present), in year order."""
    wanted = None if years is None else [int(y) for y in years]
    groups = table.split_by_year(wanted)
    out = [year_summary(groups[y], year=y, higher_order=higher_order) for y in sorted(groups)]
    logger.info("summarised %d years (%d event rows)", len(out), len(table))
    return out
