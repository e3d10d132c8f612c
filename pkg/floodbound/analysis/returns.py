"""
k-year return levels from replicate matrices.

Within a replicate, the k-year level is the ceil(n_y/k)-th largest yearly total.
Across replicates, point estimates are means and prediction-interval endpoints are
inverse-empirical-CDF quantiles.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from floodbound.config.defaults import (
    DEFAULT_BOOTSTRAP_B,
    DEFAULT_RETURN_PERIODS,
    MIN_REPLICATES_FOR_INTERVALS,
    STREAM_REPORT_BOOTSTRAP,
)
from floodbound.errors import NumericalError, ValidationError
from floodbound.params.dataclasses import ReplicateMatrix
from floodbound.simulation.rng import substream


logger = logging.getLogger(__name__)

REPORT_COLUMNS = (
    "k",
    "point_lower",
    "point_upper",
    "pi_low",
    "pi_high",
    "baseline_point",
    "baseline_lo",
    "baseline_hi",
    "width_ratio",
    "width_ratio_se",
)

PI_LEVELS = (0.025, 0.975)


@dataclass(frozen=True)
class ReturnLevelReport:
    """
    Return levels per k.

    q_lower / q_upper hold the per-replicate levels (M x len(ks)); the summary
    arrays are derived from them. Baseline fields are None unless a baseline was given.
    """

    ks: Tuple[int, ...]
    q_lower: np.ndarray
    q_upper: np.ndarray
    point_lower: np.ndarray
    point_upper: np.ndarray
    pi_low: np.ndarray
    pi_high: np.ndarray
    baseline_point: Optional[np.ndarray] = None
    baseline_lo: Optional[np.ndarray] = None
    baseline_hi: Optional[np.ndarray] = None
    width_ratio: Optional[np.ndarray] = None
    width_ratio_se: Optional[np.ndarray] = None

    @property
    def M(self) -> int:
        return int(self.q_lower.shape[0])

    def to_frame(self) -> pd.DataFrame:
        nk = len(self.ks)
        nan = np.full(nk, np.nan)

        def col(x):
            return nan if x is None else x

        return pd.DataFrame(
            {
                "k": list(self.ks),
                "point_lower": self.point_lower,
                "point_upper": self.point_upper,
                "pi_low": self.pi_low,
                "pi_high": self.pi_high,
                "baseline_point": col(self.baseline_point),
                "baseline_lo": col(self.baseline_lo),
                "baseline_hi": col(self.baseline_hi),
                "width_ratio": col(self.width_ratio),
                "width_ratio_se": col(self.width_ratio_se),
            },
            columns=list(REPORT_COLUMNS),
        )


def _order_index(n_y: int, k: int) -> int:
    if k < 2:
        raise ValidationError(f"return period k must be >= 2 (got {k})")
    if k > n_y:
        raise ValidationError(f"return period k={k} exceeds the number of years n_y={n_y}")
    r = -(-n_y // k)  # ceil(n_y / k)
    return n_y - r


def return_level(yearly_totals, k: int):
    """
    The ceil(n_y/k)-th largest yearly total.

    Accepts a vector of n_y totals or an (M, n_y) matrix (one level per row).
    """
    totals = np.asarray(yearly_totals, dtype=float)
    n_y = totals.shape[-1]
    idx = _order_index(n_y, int(k))
    level = np.sort(totals, axis=-1)[..., idx]
    if totals.ndim == 1:
        return float(level)
    return level


def return_levels(values: np.ndarray, ks: Sequence[int]) -> np.ndarray:
    """(M, len(ks)) per-replicate return levels of an (M, n_y) matrix."""
    values = np.asarray(values, dtype=float)
    n_y = values.shape[1]
    idx = [_order_index(n_y, int(k)) for k in ks]
    return np.sort(values, axis=1)[:, idx]


def type1_quantile(x: np.ndarray, q, axis: int = 0):
    """Inverse empirical CDF quantile."""
    return np.quantile(x, q, axis=axis, method="inverted_cdf")


def _values(m: Union[ReplicateMatrix, np.ndarray]) -> np.ndarray:
    return m.values if isinstance(m, ReplicateMatrix) else np.asarray(m, dtype=float)


def _summaries(q_lower: np.ndarray, q_upper: np.ndarray):
    return (
        q_lower.mean(axis=0),
        q_upper.mean(axis=0),
        type1_quantile(q_lower, PI_LEVELS[0]),
        type1_quantile(q_upper, PI_LEVELS[1]),
    )


def aggregate(
    matrix_minus: Union[ReplicateMatrix, np.ndarray],
    matrix_plus: Union[ReplicateMatrix, np.ndarray],
    ks: Sequence[int] = DEFAULT_RETURN_PERIODS,
    *,
    baseline: Union[ReplicateMatrix, np.ndarray, "ReturnLevelReport", None] = None,
    bootstrap_B: int = 0,
    seed: int = 0,
) -> ReturnLevelReport:
    """
    Return-level report from coupled lower/upper matrices.

    Parameters
    ----------
    matrix_minus, matrix_plus : ReplicateMatrix or ndarray
        (M, n_y) matrices sharing replicate and year order.
    ks : sequence of int
    baseline : matrix or report, optional
        Standard-method results; adds baseline columns and width ratios.
    bootstrap_B : int
        Bootstrap resamples for the width-ratio standard error (0: no SE).
    seed : int
        Seed of the bootstrap stream.
    """
    lo = _values(matrix_minus)
    hi = _values(matrix_plus)
    if lo.shape != hi.shape:
        raise ValidationError(f"lower/upper matrices differ in shape: {lo.shape} vs {hi.shape}")
    if lo.shape[0] < MIN_REPLICATES_FOR_INTERVALS:
        logger.warning(
            "only M=%d replicates: the 2.5%%/97.5%% quantiles are poorly estimated", lo.shape[0]
        )

    ks = tuple(int(k) for k in ks)
    q_lower = return_levels(lo, ks)
    q_upper = return_levels(hi, ks)
    point_lower, point_upper, pi_low, pi_high = _summaries(q_lower, q_upper)
    report = ReturnLevelReport(
        ks=ks,
        q_lower=q_lower,
        q_upper=q_upper,
        point_lower=point_lower,
        point_upper=point_upper,
        pi_low=pi_low,
        pi_high=pi_high,
    )
    if baseline is None:
        return report

    base = baseline if isinstance(baseline, ReturnLevelReport) else aggregate(baseline, baseline, ks)
    if base.ks != ks:
        raise ValidationError("baseline report uses different return periods")
    ratio, se = width_ratio(report, base, bootstrap_B, seed=seed)
    return ReturnLevelReport(
        ks=ks,
        q_lower=q_lower,
        q_upper=q_upper,
        point_lower=point_lower,
        point_upper=point_upper,
        pi_low=pi_low,
        pi_high=pi_high,
        baseline_point=base.point_upper,
        baseline_lo=base.pi_low,
        baseline_hi=base.pi_high,
        width_ratio=ratio,
        width_ratio_se=se,
    )


def _width(q_lower: np.ndarray, q_upper: np.ndarray) -> np.ndarray:
    return type1_quantile(q_upper, PI_LEVELS[1]) - type1_quantile(q_lower, PI_LEVELS[0])


def width_ratio(
    report_conservative: ReturnLevelReport,
    report_baseline: ReturnLevelReport,
    bootstrap_B: int = DEFAULT_BOOTSTRAP_B,
    *,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Ratio of conservative to baseline 95% interval widths per k, with bootstrap SE.

    Replicate rows are resampled with replacement; when both reports have the same M
    the same row indices are used for both.
    """
    if report_conservative.ks != report_baseline.ks:
        raise ValidationError("reports use different return periods")

    base_width = report_baseline.pi_high - report_baseline.pi_low
    if np.any(base_width <= 0.0):
        k = report_baseline.ks[int(np.flatnonzero(base_width <= 0.0)[0])]
        raise NumericalError(f"baseline prediction interval has zero width at k={k}")
    ratio = (report_conservative.pi_high - report_conservative.pi_low) / base_width

    nk = len(report_conservative.ks)
    if bootstrap_B < 2:
        return ratio, np.full(nk, np.nan)

    rng = substream(seed, STREAM_REPORT_BOOTSTRAP)
    Mc, Mb = report_conservative.M, report_baseline.M
    paired = Mc == Mb
    draws = np.empty((bootstrap_B, nk))
    for b in range(bootstrap_B):
        ic = rng.integers(0, Mc, Mc)
        ib = ic if paired else rng.integers(0, Mb, Mb)
        wc = _width(report_conservative.q_lower[ic], report_conservative.q_upper[ic])
        wb = _width(report_baseline.q_lower[ib], report_baseline.q_upper[ib])
        with np.errstate(divide="ignore", invalid="ignore"):
            draws[b] = wc / wb
    draws = np.where(np.isfinite(draws), draws, np.nan)
    se = np.nanstd(draws, axis=0, ddof=1)
    return ratio, se


def relative_to_baseline(report: ReturnLevelReport) -> pd.DataFrame:
    """(value - baseline point) / baseline point for every reported quantity."""
    if report.baseline_point is None:
        raise ValidationError("report has no baseline")
    s = report.baseline_point
    return pd.DataFrame(
        {
            "k": list(report.ks),
            "point_lower": (report.point_lower - s) / s,
            "point_upper": (report.point_upper - s) / s,
            "pi_low": (report.pi_low - s) / s,
            "pi_high": (report.pi_high - s) / s,
            "baseline_lo": (report.baseline_lo - s) / s,
            "baseline_hi": (report.baseline_hi - s) / s,
        }
    )


def write_report(report: ReturnLevelReport, out_dir, stem: str = "return_levels") -> Tuple[Path, Path]:
    """Write ``<stem>.csv`` and its JSON mirror ``<stem>.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frame = report.to_frame()
    csv_path = out / f"{stem}.csv"
    json_path = out / f"{stem}.json"
    frame.to_csv(csv_path, index=False)
    records = []
    for _, row in frame.iterrows():
        rec = {"k": int(row["k"])}
        for key in REPORT_COLUMNS[1:]:
            v = float(row[key])
            rec[key] = None if np.isnan(v) else v
        records.append(rec)
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump({"M": report.M, "rows": records}, fh, indent=2)
    logger.info("wrote %s and %s", csv_path, json_path)
    return csv_path, json_path
