"""
Special functions used by the concentration bounds.

- f_k(u) = sum_{j>=0} u^j / (j+k)!   (the exponential remainder, divided by u^k)
- h(u)   = (1+u) log(1+u) - u        (Bennett's function)
- lambert_w0 / lambert_w0_exp        (principal branch of Lambert's W)

All functions accept scalars or numpy arrays and return the same kind.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from floodbound.config.defaults import get_default_solver_config
from floodbound.params.dataclasses import SolverConfig


_INV_E = math.exp(-1.0)

# Above this, exp(log_x) is not formed explicitly when evaluating W(exp(log_x)).
_LOG_ARG_SWITCH = 500.0


def _fk_series(u: np.ndarray, k: int, rtol: float) -> np.ndarray:
    term = np.full_like(u, 1.0 / math.factorial(k))
    total = term.copy()
    for j in range(1, 80):
        term = term * u / (j + k)
        total = total + term
        if np.all(np.abs(term) <= rtol * np.abs(total)):
            break
    return total


def _fk_closed(u: np.ndarray, k: int) -> np.ndarray:
    poly = np.zeros_like(u)
    coef = np.ones_like(u)
    for j in range(k):
        if j > 0:
            coef = coef * u / j
        poly = poly + coef
    with np.errstate(over="ignore", invalid="ignore"):
        return (np.exp(u) - poly) / u**k


def f_k(u, k: int, *, config: Optional[SolverConfig] = None):
    """
    Exponential remainder f_k(u) = {exp(u) - sum_{j<k} u^j/j!} / u^k.

    Parameters
    ----------
    u : float or ndarray
        Argument (finite).
    k : int
        Order, k >= 1.

    Returns
    -------
    float or ndarray
        Series form for |u| below the switch-over, closed form above it;
        +inf once exp(u) overflows.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    cfg = get_default_solver_config() if config is None else config

    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.empty_like(u_arr)
    small = np.abs(u_arr) < cfg.fk_switch
    if np.any(small):
        out[small] = _fk_series(u_arr[small], k, cfg.series_rtol)
    if np.any(~small):
        out[~small] = _fk_closed(u_arr[~small], k)

    if np.isscalar(u):
        return float(out[0])
    return out.reshape(np.shape(u))


def h(u):
    """Bennett's function h(u) = (1+u) log(1+u) - u, for u >= 0."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0.0):
        raise ValueError("h(u) requires u >= 0")

    u1 = np.atleast_1d(u_arr)
    out = (1.0 + u1) * np.log1p(u1) - u1

    # alternating series avoids the cancellation near 0
    small = u1 < 1e-3
    if np.any(small):
        us = u1[small]
        acc = np.zeros_like(us)
        power = us * us
        for j in range(2, 10):
            acc = acc + (-1.0) ** j * power / (j * (j - 1))
            power = power * us
        out[small] = acc

    if np.isscalar(u):
        return float(out[0])
    return out.reshape(np.shape(u))


def _initial_guess(x: np.ndarray) -> np.ndarray:
    w = np.empty_like(x)

    near = x < -0.32
    far = x >= 3.0
    mid = ~(near | far)

    if np.any(near):
        p = np.sqrt(np.maximum(2.0 * (math.e * x[near] + 1.0), 0.0))
        w[near] = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    if np.any(mid):
        w[mid] = np.log1p(x[mid])
    if np.any(far):
        l1 = np.log(x[far])
        l2 = np.log(l1)
        w[far] = l1 - l2 + l2 / l1
    return w


def lambert_w0(x, *, max_iter: Optional[int] = None):
    """
    Principal branch of Lambert's W: the w >= -1 solving w exp(w) = x.

    Halley iteration from a branch-point series (x near -1/e), log1p (moderate x)
    or the asymptotic log expansion (large x).
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < -_INV_E):
        raise ValueError("lambert_w0 requires x >= -1/e")
    n_iter = get_default_solver_config().lambert_max_iter if max_iter is None else int(max_iter)

    x1 = np.atleast_1d(x_arr)
    w = _initial_guess(x1)
    branch_point = x1 == -_INV_E
    w[branch_point] = -1.0
    active = ~branch_point & np.isfinite(x1) & (x1 != 0.0)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(n_iter):
            if not np.any(active):
                break
            wa = w[active]
            xa = x1[active]
            ew = np.exp(wa)
            f = wa * ew - xa
            wp1 = wa + 1.0
            denom = ew * wp1 - (wa + 2.0) * f / (2.0 * wp1)
            step = np.where(denom != 0.0, f / denom, 0.0)
            w[active] = wa - step
            done = np.abs(step) <= 4.0 * np.finfo(float).eps * (1.0 + np.abs(wa))
            idx = np.flatnonzero(active)
            active[idx[done]] = False

    w[x1 == 0.0] = 0.0
    w[np.isposinf(x1)] = np.inf

    if np.isscalar(x):
        return float(w[0])
    return w.reshape(np.shape(x))


def lambert_w0_exp(log_x, *, max_iter: Optional[int] = None):
    """
    W(exp(log_x)) without forming exp(log_x) when it would overflow.

    For large log_x solves w + log(w) = log_x by Newton's method.
    """
    lx = np.atleast_1d(np.asarray(log_x, dtype=float))
    out = np.empty_like(lx)

    big = lx > _LOG_ARG_SWITCH
    if np.any(~big):
        out[~big] = lambert_w0(np.exp(lx[~big]), max_iter=max_iter)
    if np.any(big):
        L = lx[big]
        w = L - np.log(L)
        for _ in range(50):
            step = (w + np.log(w) - L) / (1.0 + 1.0 / w)
            w = w - step
            if np.all(np.abs(step) <= 4.0 * np.finfo(float).eps * np.abs(w)):
                break
        out[big] = w

    if np.isscalar(log_x):
        return float(out[0])
    return out.reshape(np.shape(log_x))
