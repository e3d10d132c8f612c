"""
Vectorised one-dimensional solvers.

Every routine works elementwise on arrays of independent problems, so a whole
t-grid (or a whole replicate column) is solved in one pass of numpy operations.
"""

from __future__ import annotations

import math
from typing import Callable, Tuple

import numpy as np


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi
_INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0  # 1/phi^2


def expand_bracket(
    obj: Callable[[np.ndarray], np.ndarray],
    hi: np.ndarray,
    max_doublings: int = 200,
) -> np.ndarray:
    """
    Double ``hi`` elementwise until obj(2 hi) >= obj(hi).

    For a convex objective with obj(0) = 0 the minimiser then lies in [0, 2 hi].
    """
    hi = np.array(hi, dtype=float, copy=True)
    with np.errstate(over="ignore", invalid="ignore"):
        f_hi = obj(hi)
        for _ in range(max_doublings):
            f_next = obj(2.0 * hi)
            grow = f_next < f_hi
            if not np.any(grow):
                break
            hi = np.where(grow, 2.0 * hi, hi)
            f_hi = np.where(grow, f_next, f_hi)
    return 2.0 * hi


def golden_section_min(
    obj: Callable[[np.ndarray], np.ndarray],
    a: np.ndarray,
    b: np.ndarray,
    rtol: float = 1e-10,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Golden-section search on [a, b], elementwise.

    Parameters
    ----------
    obj : callable
        Unimodal objective evaluated on arrays of the same shape as ``a``.
    a, b : ndarray
        Brackets.
    rtol : float
        Stop once every bracket has shrunk below rtol times its initial width.

    Returns
    -------
    x, f : ndarray
        Approximate minimiser and the smallest objective value seen.
    """
    a = np.array(a, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    dist = b - a

    if not np.any(dist > 0.0):
        x = 0.5 * (a + b)
        return x, obj(x)

    n_iter = int(math.ceil(math.log(rtol) / math.log(_INV_PHI)))

    with np.errstate(over="ignore", invalid="ignore"):
        c = a + _INV_PHI_SQ * dist
        d = a + _INV_PHI * dist
        yc = obj(c)
        yd = obj(d)

        for _ in range(n_iter):
            left = yc < yd
            dist = _INV_PHI * dist
            # left: b <- d, d <- c ; right: a <- c, c <- d
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            new_d = np.where(left, c, a + _INV_PHI * dist)
            new_c = np.where(left, a + _INV_PHI_SQ * dist, d)
            new_yd = np.where(left, yc, np.nan)
            new_yc = np.where(left, np.nan, yd)
            # one fresh evaluation per element, at c (left) or d (right)
            probe = np.where(left, new_c, new_d)
            y_probe = obj(probe)
            yc = np.where(left, y_probe, new_yc)
            yd = np.where(left, new_yd, y_probe)
            c, d = new_c, new_d

        x = np.where(yc < yd, c, d)
        f = np.minimum(yc, yd)
    return x, f


def bisect_decreasing(
    fn: Callable[[np.ndarray], np.ndarray],
    target: np.ndarray,
    step: np.ndarray,
    rtol: float = 1e-10,
    max_doublings: int = 200,
    max_bisections: int = 400,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Solve fn(x) = target for x >= 0 with fn nonincreasing and fn(0) >= target.

    The bracket [0, hi] grows from ``step`` by doubling, then bisection runs until
    hi - lo <= rtol * hi.

    Returns
    -------
    x, converged : ndarray
        Root estimates and a mask of elements that met the tolerance.
    """
    target = np.asarray(target, dtype=float)
    hi = np.broadcast_to(np.asarray(step, dtype=float), target.shape).copy()
    lo = np.zeros_like(hi)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        bracketed = fn(hi) <= target
        for _ in range(max_doublings):
            if np.all(bracketed):
                break
            lo = np.where(bracketed, lo, hi)
            hi = np.where(bracketed, hi, 2.0 * hi)
            bracketed = bracketed | (fn(hi) <= target)

        for _ in range(max_bisections):
            done = (hi - lo) <= rtol * hi
            if np.all(done | ~bracketed):
                break
            mid = 0.5 * (lo + hi)
            above = fn(mid) > target
            lo = np.where(done, lo, np.where(above, mid, lo))
            hi = np.where(done, hi, np.where(above, hi, mid))

    converged = bracketed & ((hi - lo) <= rtol * hi)
    return 0.5 * (lo + hi), converged
