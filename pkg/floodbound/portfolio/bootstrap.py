from __future__ import annotations

import logging
from typing import Tuple

import numpy as np

from floodbound.config.defaults import STREAM_BOOTSTRAP
from floodbound.errors import ValidationError
from floodbound.params.dataclasses import EventTable, Portfolio
from floodbound.simulation.rng import substream


logger = logging.getLogger(__name__)


def _repair_subrisk_total(
    draws: np.ndarray,
    n_sub: np.ndarray,
    target: int,
    rng: np.random.Generator,
    max_steps: int = 200_000,
) -> Tuple[np.ndarray, bool]:
    """
    Swap drawn risks until the drawn subrisk counts sum to ``target``.

    Each step replaces one random draw by the risk whose count is closest to what
    would close the gap, and keeps the swap only if the gap shrinks.
    """
    order = np.argsort(n_sub, kind="stable")
    sorted_counts = n_sub[order]
    draws = draws.copy()
    gap = int(np.sum(n_sub[draws])) - target
    for _ in range(max_steps):
        if gap == 0:
            return draws, True
        i = int(rng.integers(draws.size))
        wanted = int(n_sub[draws[i]]) - gap
        j = int(np.clip(np.searchsorted(sorted_counts, wanted), 0, sorted_counts.size - 1))
        candidates = [j] if j == 0 else [j - 1, j]
        best = min(candidates, key=lambda c: abs(int(sorted_counts[c]) - wanted))
        new_gap = gap - int(n_sub[draws[i]]) + int(sorted_counts[best])
        if abs(new_gap) < abs(gap):
            value = sorted_counts[best]
            lo = int(np.searchsorted(sorted_counts, value, side="left"))
            hi = int(np.searchsorted(sorted_counts, value, side="right"))
            draws[i] = order[int(rng.integers(lo, hi))]
            gap = new_gap
    return draws, gap == 0


def bootstrap_scale(
    portfolio: Portfolio,
    events: EventTable,
    factor: int,
    seed: int,
) -> Tuple[Portfolio, EventTable]:
    """
    Resample risks with replacement into a portfolio ``factor`` times as large.

    The result has exactly factor x the risks and factor x the subrisks. Every copy of
    a risk keeps its subrisks, value and event rows; copies are named ``<risk_id>#<copy>``.
    """
    if factor < 1:
        raise ValidationError("factor must be >= 1")
    N = len(portfolio)
    if N == 0:
        return portfolio, events

    rng = substream(seed, STREAM_BOOTSTRAP)
    n_sub = portfolio.n_subrisks.astype(np.int64)
    draws = rng.integers(0, N, size=factor * N)
    draws, converged = _repair_subrisk_total(draws, n_sub, factor * int(np.sum(n_sub)), rng)
    if not converged:
        logger.warning(
            "bootstrap x%d: subrisk total %d differs from target %d",
            factor, int(np.sum(n_sub[draws])), factor * int(np.sum(n_sub)),
        )

    # new risks grouped by source risk
    src = np.sort(draws, kind="stable")
    copies = np.bincount(src, minlength=N)
    start = np.concatenate([[0], np.cumsum(copies)[:-1]])
    copy_no = np.arange(src.size) - start[src]
    ids = np.array(
        [f"{portfolio.risk_id[s]}#{c}" for s, c in zip(src.tolist(), copy_no.tolist())],
        dtype=object,
    )
    scaled = Portfolio(
        risk_id=ids,
        total_insured_value=portfolio.total_insured_value[src],
        n_subrisks=portfolio.n_subrisks[src],
    )

    per_row = copies[events.risk]
    rows = np.repeat(np.arange(len(events)), per_row)
    offset = np.arange(rows.size) - np.repeat(np.cumsum(per_row) - per_row, per_row)
    new_risk = start[events.risk[rows]] + offset

    out = EventTable(
        year=events.year[rows],
        event=events.event[rows],
        risk=new_risk,
        p=events.p[rows],
        alpha=events.alpha[rows],
        beta=events.beta[rows],
        exposure=scaled.exposure[new_risk],
        n_sub=scaled.n_subrisks[new_risk],
        risk_ids=ids,
    )
    order = np.lexsort((out.risk, out.event, out.year))
    logger.info(
        "bootstrap x%d: %d -> %d risks, %d -> %d event rows",
        factor, N, len(scaled), len(events), len(out),
    )
    return scaled, out.take(order)
