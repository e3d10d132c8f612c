from __future__ import annotations

from typing import Optional, Sequence

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


_FAMILY_STYLE = {
    "bennett": dict(color="black", linestyle="-"),
    "B1": dict(color="tab:blue", linestyle="-."),
    "B2": dict(color="magenta", linestyle=":"),
    "B3": dict(color="tab:red", linestyle="--"),
    "clt": dict(color="tab:cyan", linestyle="-"),
    "hoeffding": dict(color="tab:green", linestyle="-"),
    "B-lb": dict(color="tab:blue", linestyle="-", linewidth=0.8),
}


def plot_bound_curves(curve: pd.DataFrame, t_unit: float = 1.0, ax=None, title: Optional[str] = None):
    """
    Plot a ``bounds_curve.csv`` table: one line per family, plus the MC band when present.

    ``t_unit`` rescales the x-axis (e.g. the mean c_i to plot t / c-bar).
    """
    for col in ("t", "family", "log_prob_bound"):
        if col not in curve.columns:
            raise KeyError(f"column {col!r} not found in curve table")
    if t_unit <= 0.0:
        raise ValueError("t_unit must be > 0")

    if ax is None:
        fig, ax = plt.subplots()

    for family, rows in curve.groupby("family", sort=False):
        style = _FAMILY_STYLE.get(family, {})
        ax.plot(rows["t"] / t_unit, rows["log_prob_bound"], label=family, **style)

    if "mc_estimate" in curve.columns:
        band = curve.drop_duplicates("t")
        x = band["t"] / t_unit
        ax.plot(x, band["mc_estimate"], color="grey", label="Monte Carlo")
        ax.fill_between(x, band["mc_lo"], band["mc_hi"], color="grey", alpha=0.3)

    ax.set_xlabel("t" if t_unit == 1.0 else "t / c-bar")
    ax.set_ylabel("log-probability bound")
    if title:
        ax.set_title(title)
    ax.grid(True)
    ax.legend()
    return ax


def plot_return_levels(report: pd.DataFrame, relative: bool = False, ax=None):
    """
    Conservative point estimates and 95% prediction limits against k (log axis).

    With ``relative=True`` every quantity is shown as (v - s)/s against the baseline point s.
    """
    if ax is None:
        fig, ax = plt.subplots()

    frame = report
    if relative:
        if "baseline_point" not in report.columns or report["baseline_point"].isna().all():
            raise ValueError("relative view needs baseline columns")
        s = report["baseline_point"].to_numpy()
        frame = report.copy()
        for col in ("point_lower", "point_upper", "pi_low", "pi_high", "baseline_lo", "baseline_hi"):
            frame[col] = (report[col].to_numpy() - s) / s
        frame["baseline_point"] = 0.0

    k = frame["k"].to_numpy()
    ax.plot(k, frame["point_lower"], color="tab:blue", marker="o", label="mean q-")
    ax.plot(k, frame["point_upper"], color="tab:red", marker="o", label="mean q+")
    ax.plot(k, frame["pi_low"], color="tab:blue", linestyle="--", label="2.5% q-")
    ax.plot(k, frame["pi_high"], color="tab:red", linestyle="--", label="97.5% q+")
    if "baseline_point" in frame.columns and not frame["baseline_point"].isna().all():
        ax.plot(k, frame["baseline_point"], color="black", marker="x", label="standard")
        ax.fill_between(k, frame["baseline_lo"], frame["baseline_hi"], color="grey", alpha=0.3)

    ax.set_xscale("log")
    ax.set_xlabel("return period k [years]")
    ax.set_ylabel("relative to standard" if relative else "return level")
    ax.grid(True)
    ax.legend()
    return ax


def plot_sensitivity_boxplots(
    samples: pd.DataFrame,
    k: int,
    n_replicates: int = 30,
    baseline: Optional[pd.DataFrame] = None,
    ax=None,
):
    """
    Side-by-side boxplots of the per-replicate return levels at one k.

    Red boxes are upper-bound samples, blue boxes lower-bound samples; an optional
    ``baseline`` samples table (e.g. P0) is drawn leftmost.
    """
    if ax is None:
        fig, ax = plt.subplots(figsize=(10, 4))

    def boxes(frame: pd.DataFrame, reps: Sequence[int]):
        data, colors = [], []
        for r in reps:
            for side, color in (("lower", "tab:blue"), ("upper", "tab:red")):
                sel = frame[(frame["replicate"] == r) & (frame["side"] == side) & (frame["k"] == k)]
                data.append(sel["sample_value"].to_numpy())
                colors.append(color)
        return data, colors

    data, colors = [], []
    if baseline is not None:
        d, c = boxes(baseline, [int(baseline["replicate"].min())])
        data += d
        colors += c
    reps = np.unique(samples["replicate"])[:n_replicates]
    d, c = boxes(samples, reps.tolist())
    data += d
    colors += c

    parts = ax.boxplot(data, patch_artist=True, showfliers=False)
    for patch, color in zip(parts["boxes"], colors):
        patch.set_facecolor(color)
        patch.set_alpha(0.5)
    ax.set_xticks([])
    ax.set_ylabel(f"{k}-year return level")
    ax.grid(True, axis="y")
    return ax

