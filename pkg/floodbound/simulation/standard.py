"""
Standard (baseline) Monte Carlo: simulate every subrisk loss of every event.

T_y = sum_e sum_r (b_r / n_r) sum_s Z_{y,e,r,s}, with Z = 0 with probability 1 - p
and Z ~ Beta(alpha, beta) otherwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from floodbound.config.defaults import POINT_MASS_CONCENTRATION, STREAM_STANDARD
from floodbound.params.dataclasses import EventTable, LossTerm, ReplicateMatrix
from floodbound.simulation.parallel import parallel_map
from floodbound.simulation.rng import substream


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class YearTerms:
    """Arrays of the p > 0 terms of one year, prepared once for repeated simulation."""

    p: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    exposure: np.ndarray
    n_sub: np.ndarray

    @classmethod
    def from_table(cls, table: EventTable) -> "YearTerms":
        keep = table.p > 0.0
        return cls(
            p=table.p[keep],
            alpha=table.alpha[keep],
            beta=table.beta[keep],
            exposure=table.exposure[keep],
            n_sub=table.n_sub[keep],
        )


def draw_damage_ratios(alpha: np.ndarray, beta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    Beta(alpha, beta) draws via two Gamma variates.

    Laws with alpha + beta >= POINT_MASS_CONCENTRATION return their mean.
    """
    conc = alpha + beta
    mu = alpha / conc
    out = mu.copy()
    random = conc < POINT_MASS_CONCENTRATION
    if np.any(random):
        g1 = rng.standard_gamma(alpha[random])
        g2 = rng.standard_gamma(beta[random])
        den = g1 + g2
        with np.errstate(invalid="ignore", divide="ignore"):
            out[random] = np.where(den > 0.0, g1 / den, mu[random])
    return out


def simulate_year_standard(
    terms: Union[YearTerms, EventTable, Sequence[LossTerm]],
    rng: np.random.Generator,
) -> float:
    """
    One simulated uncentred total loss for one year.

    Parameters
    ----------
    terms : YearTerms, EventTable or sequence of LossTerm
        Rows of a single year.
    rng : numpy Generator

    Returns
    -------
    float
        Sum over flooded subrisks of exposure times the damage ratio (0 when nothing floods).
    """
    if not isinstance(terms, YearTerms):
        table = terms if isinstance(terms, EventTable) else EventTable.from_terms(list(terms))
        terms = YearTerms.from_table(table)

    if terms.p.size == 0:
        return 0.0

    wet = rng.binomial(terms.n_sub, terms.p)
    if not np.any(wet):
        return 0.0
    idx = np.repeat(np.arange(terms.p.size), wet)
    ratios = draw_damage_ratios(terms.alpha[idx], terms.beta[idx], rng)
    return float(np.sum(terms.exposure[idx] * ratios))


def _simulate_column(task: Tuple[YearTerms, int, int, int]) -> np.ndarray:
    terms, seed, M, y = task
    out = np.empty(M)
    for m in range(M):
        out[m] = simulate_year_standard(terms, substream(seed, STREAM_STANDARD, m, y))
    return out


def run_standard(
    events: EventTable,
    M: int,
    seed: int,
    years: Optional[Sequence[int]] = None,
    workers: Optional[int] = 1,
) -> ReplicateMatrix:
    """
    Standard-method replicate matrix.

    Cell (m, y) uses the substream keyed (seed, standard, m, y); columns are
    computed per year, possibly in worker processes, and assembled by index.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    year_ids = np.asarray(events.years if years is None else years, dtype=np.int64)
    groups = events.split_by_year(year_ids.tolist())

    tasks = [(YearTerms.from_table(groups[int(y)]), int(seed), int(M), int(y)) for y in year_ids]
    logger.info("standard method: M=%d, %d years, %d event rows", M, len(year_ids), len(events))
    columns = parallel_map(_simulate_column, tasks, workers=workers)

    values = np.column_stack(columns) if columns else np.empty((M, 0))
    return ReplicateMatrix(values=values, years=year_ids, method="standard", seed=int(seed))
