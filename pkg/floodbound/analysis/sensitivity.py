"""
Damage-ratio sensitivity study.

Each portfolio replicate perturbs the expected damage ratios, re-summarises the years
and runs the B2 SIR sampler; return levels of all replicates are then pooled.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from floodbound.analysis.returns import return_levels, type1_quantile
from floodbound.config.defaults import DEFAULT_RETURN_PERIODS
from floodbound.errors import ValidationError
from floodbound.params.dataclasses import B2, PerturbationScenario
from floodbound.params.perturbation import perturb
from floodbound.portfolio.moments import summarize_years
from floodbound.simulation.pipeline import PreparedInputs, run_conservative
from floodbound.simulation.rng import derived_seed


logger = logging.getLogger(__name__)

SIDES = ("lower", "upper")
SUMMARY_QUANTILES = (0.025, 0.5, 0.975)


@dataclass(frozen=True)
class SensitivityResult:
    """
    Per-replicate return levels of one scenario.

    ``lower``/``upper`` have shape (R, M, len(ks)): replicate r, SIR draw m, return period k.
    """

    scenario: PerturbationScenario
    ks: Tuple[int, ...]
    lower: np.ndarray
    upper: np.ndarray

    @property
    def R(self) -> int:
        return int(self.lower.shape[0])

    @property
    def M(self) -> int:
        return int(self.lower.shape[1])

    def side(self, name: str) -> np.ndarray:
        if name == "lower":
            return self.lower
        if name == "upper":
            return self.upper
        raise ValueError("side must be 'lower' or 'upper'")

    def pooled(self, name: str) -> np.ndarray:
        """(R*M, len(ks)) concatenation of all replicates."""
        q = self.side(name)
        return q.reshape(-1, q.shape[-1])


def run_sensitivity(
    prepared: PreparedInputs,
    scn: PerturbationScenario,
    M: int,
    ks: Sequence[int] = DEFAULT_RETURN_PERIODS,
    workers: Optional[int] = 1,
) -> SensitivityResult:
    """
    Run R perturbed SIR studies.

    Replicate r perturbs with coins keyed (seed, r) and samples with seed
    derived_seed(seed, r); years without events stay in the year set.
    """
    if M < 1:
        raise ValidationError("M must be >= 1")
    ks = tuple(int(k) for k in ks)
    years = prepared.years.tolist()

    lower = np.empty((scn.R, M, len(ks)))
    upper = np.empty((scn.R, M, len(ks)))
    for r in range(scn.R):
        events = perturb(prepared.events, scn, replicate=r)
        summaries = summarize_years(events, years=years)
        lo, hi = run_conservative(summaries, M, B2, "sir", derived_seed(scn.seed, r), workers=workers)
        lower[r] = return_levels(lo.values, ks)
        upper[r] = return_levels(hi.values, ks)
        logger.debug("%s replicate %d/%d done", scn.tag, r + 1, scn.R)

    logger.info("sensitivity %s: R=%d, M=%d, delta=%g", scn.tag, scn.R, M, scn.delta)
    return SensitivityResult(scenario=scn, ks=ks, lower=lower, upper=upper)


def pooled_quantiles(result: SensitivityResult, quantiles: Sequence[float] = SUMMARY_QUANTILES) -> pd.DataFrame:
    """Long table ``scenario,k,side,quantile,value`` of type-1 quantiles of the pooled samples."""
    rows = []
    for side in SIDES:
        pooled = result.pooled(side)
        for j, k in enumerate(result.ks):
            for q in quantiles:
                rows.append((result.scenario.tag, k, side, float(q), float(type1_quantile(pooled[:, j], q))))
    return pd.DataFrame(rows, columns=["scenario", "k", "side", "quantile", "value"])


def variance_components(samples) -> Tuple[float, float]:
    """
    One-way decomposition (sigma2_b, sigma2_w) of an (R, M) sample array.

    sigma2_w is the mean within-replicate variance; sigma2_b is the variance of the
    replicate means minus sigma2_w / M, floored at 0.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2:
        raise ValidationError("samples must be an (R, M) array")
    R, M = x.shape
    if R < 2:
        raise ValidationError(f"variance decomposition needs R >= 2 replicates (got {R})")
    if M < 2:
        raise ValidationError("variance decomposition needs M >= 2 draws per replicate")
    sigma2_w = float(np.mean(np.var(x, axis=1, ddof=1)))
    sigma2_b = max(float(np.var(np.mean(x, axis=1), ddof=1)) - sigma2_w / M, 0.0)
    return sigma2_b, sigma2_w


def _ratio(sigma2_b: float, sigma2_w: float) -> float:
    if sigma2_w == 0.0:
        return 0.0 if sigma2_b == 0.0 else float("inf")
    return sigma2_b / sigma2_w


def variance_ratio(samples) -> float:
    """sigma2_b / sigma2_w; 0 when the samples carry no variability at all."""
    return _ratio(*variance_components(samples))


def variance_table(result: SensitivityResult) -> pd.DataFrame:
    """``scenario,k,side,sigma2_b,sigma2_w,ratio`` per k and side (empty when R < 2)."""
    columns = ["scenario", "k", "side", "sigma2_b", "sigma2_w", "ratio"]
    if result.R < 2:
        return pd.DataFrame(columns=columns)
    rows = []
    for side in SIDES:
        q = result.side(side)
        for j, k in enumerate(result.ks):
            sb, sw = variance_components(q[:, :, j])
            rows.append((result.scenario.tag, k, side, sb, sw, _ratio(sb, sw)))
    return pd.DataFrame(rows, columns=columns)


def samples_frame(result: SensitivityResult) -> pd.DataFrame:
    """Boxplot-ready long format ``scenario,replicate,side,k,sample_value``."""
    R, M, nk = result.lower.shape
    replicate = np.repeat(np.arange(R), M * nk)
    k = np.tile(np.asarray(result.ks), R * M)
    frames = [
        pd.DataFrame(
            {
                "scenario": result.scenario.tag,
                "replicate": replicate,
                "side": side,
                "k": k,
                "sample_value": result.side(side).reshape(-1),
            }
        )
        for side in SIDES
    ]
    return pd.concat(frames, ignore_index=True)


def write_sensitivity(result: SensitivityResult, out_dir) -> Dict[str, Path]:
    """Write quantile, sample and variance-ratio CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "quantiles": out / "sensitivity_quantiles.csv",
        "samples": out / "sensitivity_samples.csv",
        "variance": out / "variance_ratio.csv",
    }
    pooled_quantiles(result).to_csv(paths["quantiles"], index=False)
    samples_frame(result).to_csv(paths["samples"], index=False)
    variance_table(result).to_csv(paths["variance"], index=False)
    logger.info("wrote sensitivity outputs to %s", out)
    return paths
