"""
CSV ingestion and export of portfolios and event-loss tables.

portfolio.csv : risk_id,total_insured_value,n_subrisks
events.csv    : year,event,risk_id,p,alpha,beta

Line numbers in errors count the header as line 1.
"""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from floodbound.errors import ValidationError
from floodbound.params.dataclasses import EventTable, Portfolio


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

PORTFOLIO_COLUMNS: Tuple[str, ...] = ("risk_id", "total_insured_value", "n_subrisks")
EVENT_COLUMNS: Tuple[str, ...] = ("year", "event", "risk_id", "p", "alpha", "beta")


def _read_table(path: PathLike, columns: Sequence[str]) -> Optional[pd.DataFrame]:
    """Read a CSV as strings; None for a zero-byte file."""
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except FileNotFoundError as exc:
        raise ValidationError("file not found", path=path) from exc
    except pd.errors.EmptyDataError:
        return None
    except pd.errors.ParserError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ValidationError(f"malformed row ({exc})", path=path, line=int(m.group(1)) if m else None) from exc

    if tuple(c.strip() for c in df.columns) != tuple(columns):
        raise ValidationError(f"expected header {','.join(columns)!r}", path=path, line=1)
    return df


def _parse_column(values: np.ndarray, dtype, name: str, path: PathLike) -> np.ndarray:
    try:
        return values.astype(dtype)
    except ValueError:
        for i, raw in enumerate(values):
            try:
                np.asarray([raw]).astype(dtype)
            except ValueError:
                raise ValidationError(f"malformed {name} value {raw!r}", path=path, line=i + 2) from None
        raise


def _check_rows(bad: np.ndarray, message: str, path: PathLike) -> None:
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ValidationError(message, path=path, line=i + 2)


def load_portfolio(path: PathLike) -> Portfolio:
    """Read and validate portfolio.csv."""
    df = _read_table(path, PORTFOLIO_COLUMNS)
    if df is None:
        df = pd.DataFrame({c: [] for c in PORTFOLIO_COLUMNS}, dtype=str)

    ids = df["risk_id"].to_numpy(dtype=object)
    tiv = _parse_column(df["total_insured_value"].to_numpy(dtype=str), float, "total_insured_value", path)
    nsub = _parse_column(df["n_subrisks"].to_numpy(dtype=str), np.int64, "n_subrisks", path)

    _check_rows(np.array([rid == "" for rid in ids], dtype=bool), "empty risk_id", path)
    _check_rows(~(np.isfinite(tiv) & (tiv > 0.0)), "total_insured_value must be finite and > 0", path)
    _check_rows(nsub < 1, "n_subrisks must be >= 1", path)

    dup = pd.Series(ids).duplicated().to_numpy()
    _check_rows(dup, "duplicate risk_id", path)

    logger.info("loaded portfolio %s: %d risks, %d subrisks", path, len(ids), int(np.sum(nsub)))
    return Portfolio(risk_id=ids, total_insured_value=tiv, n_subrisks=nsub)


def empty_events(portfolio: Portfolio) -> EventTable:
    z_i = np.empty(0, dtype=np.int64)
    z_f = np.empty(0, dtype=float)
    return EventTable(
        year=z_i, event=z_i, risk=z_i, p=z_f, alpha=z_f, beta=z_f,
        exposure=z_f, n_sub=z_i, risk_ids=portfolio.risk_id,
    )


def load_events(path: PathLike, portfolio: Portfolio, *, mu_cap: Optional[float] = None) -> EventTable:
    """
    Read and validate events.csv against a loaded portfolio.

    Parameters
    ----------
    path : path-like
    portfolio : Portfolio
        Every risk_id must exist here; exposure and n_sub are taken from it.
    mu_cap : float, optional
        Additionally reject rows whose mean damage ratio alpha/(alpha+beta) reaches this value.
    """
    df = _read_table(path, EVENT_COLUMNS)
    if df is None or len(df) == 0:
        logger.info("loaded events %s: 0 rows", path)
        return empty_events(portfolio)

    year = _parse_column(df["year"].to_numpy(dtype=str), np.int64, "year", path)
    event = _parse_column(df["event"].to_numpy(dtype=str), np.int64, "event", path)
    p = _parse_column(df["p"].to_numpy(dtype=str), float, "p", path)
    alpha = _parse_column(df["alpha"].to_numpy(dtype=str), float, "alpha", path)
    beta = _parse_column(df["beta"].to_numpy(dtype=str), float, "beta", path)

    _check_rows(year < 0, "year must be >= 0", path)
    _check_rows(~((p >= 0.0) & (p <= 1.0)), "p must lie in [0, 1]", path)
    _check_rows(~(np.isfinite(alpha) & (alpha > 0.0)), "alpha must be finite and > 0", path)
    _check_rows(~(np.isfinite(beta) & (beta > 0.0)), "beta must be finite and > 0", path)
    if mu_cap is not None:
        _check_rows(alpha / (alpha + beta) >= mu_cap, f"mean damage ratio must be < {mu_cap}", path)

    index = portfolio.index_of()
    ids = df["risk_id"].tolist()
    risk = np.fromiter((index.get(rid, -1) for rid in ids), dtype=np.int64, count=len(ids))
    if np.any(risk < 0):
        i = int(np.flatnonzero(risk < 0)[0])
        raise ValidationError(f"unknown risk_id {ids[i]!r}", path=path, line=i + 2)

    logger.info("loaded events %s: %d rows, %d years", path, len(df), np.unique(year).size)
    return EventTable(
        year=year,
        event=event,
        risk=risk,
        p=p,
        alpha=alpha,
        beta=beta,
        exposure=portfolio.exposure[risk],
        n_sub=portfolio.n_subrisks[risk],
        risk_ids=portfolio.risk_id,
    )


def portfolio_frame(portfolio: Portfolio) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "risk_id": portfolio.risk_id,
            "total_insured_value": portfolio.total_insured_value,
            "n_subrisks": portfolio.n_subrisks,
        },
        columns=list(PORTFOLIO_COLUMNS),
    )


def events_frame(events: EventTable) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "year": events.year,
            "event": events.event,
            "risk_id": events.risk_ids[events.risk] if len(events) else np.empty(0, dtype=object),
            "p": events.p,
            "alpha": events.alpha,
            "beta": events.beta,
        },
        columns=list(EVENT_COLUMNS),
    )


def write_portfolio(portfolio: Portfolio, path: PathLike) -> Path:
    path = Path(path)
    portfolio_frame(portfolio).to_csv(path, index=False)
    logger.info("wrote %s", path)
    return path


def write_events(events: EventTable, path: PathLike) -> Path:
    path = Path(path)
    events_frame(events).to_csv(path, index=False)
    logger.info("wrote %s", path)
    return path
