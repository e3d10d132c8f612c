from __future__ import annotations

import numpy as np
import pytest

from floodbound.params.dataclasses import EventTable, Portfolio, SummandStats
from floodbound.portfolio.io import write_events, write_portfolio


def build_portfolio(n_risks: int, seed: int) -> Portfolio:
    """Risks with log-uniform subrisk counts in [1, 50] and values in [2e5, 5e6]."""
    rng = np.random.default_rng(seed)
    n_sub = np.floor(np.exp(rng.uniform(0.0, np.log(51.0), n_risks))).astype(np.int64)
    n_sub = np.clip(n_sub, 1, 50)
    tiv = rng.uniform(2e5, 5e6, n_risks)
    ids = np.array([f"R{i:05d}" for i in range(n_risks)], dtype=object)
    return Portfolio(risk_id=ids, total_insured_value=tiv, n_subrisks=n_sub)


def build_events(
    portfolio: Portfolio,
    n_years: int,
    seed: int,
    events_per_year: float = 2.0,
    hit_fraction: float = 0.3,
) -> EventTable:
    """Poisson event counts per year; each event floods a random subset of risks."""
    rng = np.random.default_rng(seed)
    N = len(portfolio)
    cols = {k: [] for k in ("year", "event", "risk", "p", "alpha", "beta")}
    for y in range(n_years):
        for e in range(int(rng.poisson(events_per_year))):
            hit = np.flatnonzero(rng.random(N) < hit_fraction)
            mu = rng.uniform(0.05, 0.6, hit.size)
            conc = rng.uniform(2.0, 20.0, hit.size)
            cols["year"].append(np.full(hit.size, y))
            cols["event"].append(np.full(hit.size, e))
            cols["risk"].append(hit)
            cols["p"].append(rng.beta(1.0, 20.0, hit.size))
            cols["alpha"].append(mu * conc)
            cols["beta"].append((1.0 - mu) * conc)

    def cat(key, dtype):
        parts = cols[key]
        return np.concatenate(parts).astype(dtype) if parts else np.empty(0, dtype=dtype)

    risk = cat("risk", np.int64)
    return EventTable(
        year=cat("year", np.int64),
        event=cat("event", np.int64),
        risk=risk,
        p=cat("p", float),
        alpha=cat("alpha", float),
        beta=cat("beta", float),
        exposure=portfolio.exposure[risk],
        n_sub=portfolio.n_subrisks[risk],
        risk_ids=portfolio.risk_id,
    )


def random_stats(rng: np.random.Generator, n: int = 1) -> SummandStats:
    vbar = rng.uniform(0.1, 2.0)
    K = vbar * rng.uniform(0.0, 1.0)
    K1 = K * rng.uniform(0.0, 1.0)
    return SummandStats(n=n, vbar=vbar, K=K, K1=K1, cstar=rng.uniform(0.1, 3.0))


@pytest.fixture
def small_portfolio() -> Portfolio:
    return build_portfolio(60, seed=1)


@pytest.fixture
def small_events(small_portfolio) -> EventTable:
    return build_events(small_portfolio, n_years=40, seed=2)


@pytest.fixture
def input_files(tmp_path, small_portfolio, small_events):
    """(portfolio.csv, events.csv) of the small fixture."""
    p = write_portfolio(small_portfolio, tmp_path / "portfolio.csv")
    e = write_events(small_events, tmp_path / "events.csv")
    return p, e


@pytest.fixture
def make_stats():
    return random_stats


@pytest.fixture
def make_inputs():
    """Builder for in-memory (Portfolio, EventTable) fixtures of any size."""

    def build(n_risks: int, n_years: int, seed: int = 0, **kwargs):
        portfolio = build_portfolio(n_risks, seed=seed)
        return portfolio, build_events(portfolio, n_years, seed=seed + 1, **kwargs)

    return build
