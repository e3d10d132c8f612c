"""
Bound-implied distributions of a yearly total and their direct inversion.

For the upper tail g_hi(s) = min(1, exp(n logb((s - E S)/n))) bounds P(S >= s) and
F+(s) = 1 - g_hi(s) is stochastically larger than the true law. For the lower tail
g_lo(s) = min(1, exp(n logb((E S - s)/n))) bounds P(S <= s) and F-(s) = g_lo(s)
is stochastically smaller. Totals are nonnegative, so g_lo(s) = 0 for s < 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from floodbound.bounds.inequalities import log_bound
from floodbound.bounds.optimize import bisect_decreasing
from floodbound.config.defaults import DEFAULT_SOLVER_CONFIG, DIRECT_FAMILIES
from floodbound.errors import ConfigError, NumericalError
from floodbound.params.dataclasses import BoundFamily, SummandStats, YearSummary


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundDistribution:
    """Survival-function view of one year and one tail under one bound family."""

    year: int
    tail: str
    family: BoundFamily
    stats: Optional[SummandStats]
    expected_total: float

    def __post_init__(self) -> None:
        if self.tail not in ("upper", "lower"):
            raise ValueError("tail must be 'upper' or 'lower'")

    @classmethod
    def from_summary(cls, summary: YearSummary, tail: str, family: BoundFamily) -> "BoundDistribution":
        return cls(
            year=summary.year,
            tail=tail,
            family=family,
            stats=summary.stats(tail),
            expected_total=summary.expected_total,
        )

    @property
    def degenerate(self) -> bool:
        """No randomness left: empty year or zero-variance summands."""
        return self.stats is None or self.stats.vbar == 0.0

    def exceedance(self, s):
        """Per-summand deviation t of s from the mean, in the direction of this tail."""
        s = np.asarray(s, dtype=float)
        n = 1 if self.stats is None else self.stats.n
        if self.tail == "upper":
            return (s - self.expected_total) / n
        return (self.expected_total - s) / n

    def log_survival_t(self, t):
        """n * logb(t), 0 for t <= 0."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if self.stats is None:
            return np.where(t_arr > 0.0, -np.inf, 0.0)
        with np.errstate(invalid="ignore"):
            out = self.stats.n * np.asarray(log_bound(self.family, np.maximum(t_arr, 0.0), self.stats))
        return np.where(t_arr > 0.0, np.minimum(out, 0.0), 0.0)

    def log_survival(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = self.log_survival_t(self.exceedance(s_arr))
        if self.tail == "lower":
            out = np.where(s_arr < 0.0, -np.inf, out)
        if np.isscalar(s):
            return float(out[0])
        return out.reshape(np.shape(s))

    def survival(self, s):
        return np.exp(self.log_survival(s))

    def invert(self, u) -> np.ndarray:
        """
        Direct inversion: F+^{-1}(u) for the upper tail, F-^{-1}(u) for the lower tail.

        Parameters
        ----------
        u : float or ndarray
            Uniforms in (0, 1).

        Returns
        -------
        float or ndarray
            Upper: s >= E S with g_hi(s) = 1 - u. Lower: 0 <= s <= E S with g_lo(s) = u.
        """
        u_arr = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any((u_arr < 0.0) | (u_arr > 1.0)):
            raise ValueError("u must lie in [0, 1]")

        with np.errstate(divide="ignore"):
            target = np.log1p(-u_arr) if self.tail == "upper" else np.log(u_arr)
        s = np.full(u_arr.shape, self.expected_total)

        if not self.degenerate:
            infinite = np.isneginf(target)
            s[infinite] = np.inf if self.tail == "upper" else 0.0
        active = (target < 0.0) & np.isfinite(target)
        if not self.degenerate and np.any(active):
            cfg = DEFAULT_SOLVER_CONFIG
            n = self.stats.n
            step = np.sqrt(n * self.stats.vbar) / n
            t, converged = bisect_decreasing(
                self.log_survival_t,
                target[active],
                np.full(int(np.sum(active)), step),
                rtol=cfg.inversion_rtol,
                max_doublings=cfg.inversion_max_doublings,
                max_bisections=cfg.inversion_max_bisections,
            )
            if not np.all(converged):
                bad = u_arr[active][~converged][0]
                raise NumericalError(f"year {self.year}: {self.tail}-tail inversion did not converge at u={bad!r}")
            if self.tail == "upper":
                s[active] = self.expected_total + n * t
            else:
                s[active] = np.maximum(self.expected_total - n * t, 0.0)

        if np.isscalar(u):
            return float(s[0])
        return s.reshape(np.shape(u))


def survival_g(dist: BoundDistribution, s):
    """Bound on P(S >= s) (upper tail) or P(S <= s) (lower tail), 1 on the mean side."""
    return dist.survival(s)


def invert_direct(dist: BoundDistribution, u):
    return dist.invert(u)


def check_direct_family(family: BoundFamily) -> None:
    if family.tag not in DIRECT_FAMILIES:
        raise ConfigError(f"direct sampling supports {', '.join(DIRECT_FAMILIES)}; got {family}")


def coupled_sample(summary: YearSummary, u, family: BoundFamily) -> Tuple[np.ndarray, np.ndarray]:
    """
    One uniform drives both tails: s- = F-^{-1}(u), s+ = F+^{-1}(u), so s- <= E S <= s+.
    """
    lower = BoundDistribution.from_summary(summary, "lower", family)
    upper = BoundDistribution.from_summary(summary, "upper", family)
    return lower.invert(u), upper.invert(u)
