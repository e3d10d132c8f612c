from __future__ import annotations

import logging
from typing import Tuple

import numpy as np

from floodbound.config.defaults import STREAM_TOY
from floodbound.params.dataclasses import EventTable, Portfolio, ToyScenario
from floodbound.simulation.rng import substream


logger = logging.getLogger(__name__)

# Beta(1e12, 1e-4) is a point mass at 1: a flooded risk loses its whole value.
TOY_ALPHA = 1e12
TOY_BETA = 1e-4


def _draw_values(tag: str, rng: np.random.Generator, n: int) -> np.ndarray:
    if tag == "i":
        return np.abs(rng.standard_normal(n))
    if tag == "iii":
        return rng.pareto(4.0, n) + 1.0
    return rng.exponential(1.0, n)


def _draw_probabilities(tag: str, rng: np.random.Generator, n: int) -> np.ndarray:
    if tag == "iv":
        return rng.uniform(0.0, 1.0, n)
    return rng.beta(1.0, 10.0, n)


def generate_toy(scn: ToyScenario) -> Tuple[Portfolio, EventTable]:
    """
    Single-year portfolio of scaled Bernoulli losses Z_i = b_i * Bernoulli(p_i).

    Scenarios:
      - (i)   b ~ |N(0, 1)|,       p ~ Beta(1, 10)
      - (ii)  b ~ Exp(1),          p ~ Beta(1, 10)
      - (iii) b ~ Pareto(shape 4), p ~ Beta(1, 10)
      - (iv)  b ~ Exp(1),          p ~ Unif(0, 1)

    Each risk has one subrisk and one row in year 0, event 0.
    """
    rng = substream(scn.seed, STREAM_TOY)
    n = scn.n
    b = _draw_values(scn.tag, rng, n)
    p = _draw_probabilities(scn.tag, rng, n)
    # b must be > 0 for a valid insured value
    b = np.maximum(b, np.finfo(float).tiny)

    width = len(str(n - 1))
    risk_id = np.array([f"toy{i:0{width}d}" for i in range(n)], dtype=object)
    portfolio = Portfolio(
        risk_id=risk_id,
        total_insured_value=b,
        n_subrisks=np.ones(n, dtype=np.int64),
    )
    events = EventTable(
        year=np.zeros(n, dtype=np.int64),
        event=np.zeros(n, dtype=np.int64),
        risk=np.arange(n, dtype=np.int64),
        p=p,
        alpha=np.full(n, TOY_ALPHA),
        beta=np.full(n, TOY_BETA),
        exposure=b.copy(),
        n_sub=np.ones(n, dtype=np.int64),
        risk_ids=risk_id,
    )
    logger.info("toy scenario (%s): n=%d, seed=%d", scn.tag, n, scn.seed)
    return portfolio, events
