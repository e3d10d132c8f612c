"""
Concentration bounds on (1/n) log P(S_n >= n t) for a sum of n independent centred summands.

Every bound is evaluated from a SummandStats summary:

  Hoeffding : -2 t^2 / mean_sq_range
  Bennett   : -(vbar / c*^2) h(c* t / vbar)
  Bernstein : -t^2 / (2 (vbar + c* t / 3))
  CLT       : -t^2 / (2 vbar)                (reference curve, not a bound)
  B1        : inf_l { B(l; K, K1) - l t }    (numerical)
  B2        : B(l*; K, K1) - l* t            (closed-form l*)
  B3        : B(l*; K, 0)  - l* t
  B-lb      : inf_l of the polynomial lower envelope of B
  B-higher  : inf_l of the mgf bound using K_1..K_J

with the mgf bound B(l) = l^2 vbar / 2 + l^2 K {f_2(l c*) - 1/2} - l^4 c*^2 K1 f_4(l c*).

B is evaluated in the equivalent form
  l^2 vbar / 2 + (K - K1) c* l^3 f_3(l c*) + K1 c* l^3 / 6,
whose terms are all nonnegative, so no inf - inf arises once exp overflows.
"""

from __future__ import annotations

import math
from typing import Sequence, Tuple

import numpy as np

from floodbound.bounds.optimize import bisect_decreasing, expand_bracket, golden_section_min
from floodbound.bounds.special import f_k, h, lambert_w0_exp
from floodbound.config.defaults import DEFAULT_SOLVER_CONFIG
from floodbound.errors import ConfigError
from floodbound.params.dataclasses import BoundFamily, SummandStats


# v - K below this fraction of v is treated as the all-c_i-equal case.
_DEGENERATE_RTOL = 1e-12


# ---------------------------------------------------------------------
# Array kernels (broadcasting over lambda / t and over summary arrays)
# ---------------------------------------------------------------------

def _times(coef, values):
    """coef * values with 0 * inf taken as 0."""
    with np.errstate(invalid="ignore"):
        return np.where(coef > 0.0, coef * values, 0.0)


def mgf_b(lam, vbar, K, K1, c):
    lam = np.asarray(lam, dtype=float)
    u = lam * c
    with np.errstate(over="ignore", invalid="ignore"):
        cubic = c * lam**3
        return 0.5 * lam**2 * vbar + _times(K - K1, cubic * f_k(u, 3)) + K1 * cubic / 6.0


def mgf_b_lower_envelope(lam, vbar, K, K1, c):
    lam = np.asarray(lam, dtype=float)
    with np.errstate(over="ignore"):
        return 0.5 * lam**2 * vbar + K * c * lam**3 / 6.0 + (K - K1) * c**2 * lam**4 / 24.0


def mgf_b_higher(lam, vbar, K, ks: Sequence[float], c):
    """
    mgf bound using K_1..K_J (J = len(ks)); J = 1 coincides with mgf_b.

    Written as l^2 vbar/2 + (K - K_J) c l^3 f_3(u) + l^2 {K_J u/6 + sum_{i=2}^{J} (K_J - K_{i-1}) u^i/(i+2)!}.
    """
    lam = np.asarray(lam, dtype=float)
    J = len(ks)
    KJ = ks[-1]
    u = lam * c
    with np.errstate(over="ignore", invalid="ignore"):
        out = 0.5 * lam**2 * vbar + _times(K - KJ, c * lam**3 * f_k(u, 3))
        poly = KJ * u / 6.0
        for i in range(2, J + 1):
            poly = poly + (KJ - ks[i - 2]) * u**i / math.factorial(i + 2)
        return out + lam**2 * poly


def dmgf_b(lam, vbar, K, K1, c):
    """d/dl B(l; K, K1) = l vbar + (K - K1) l u f_2(u) + K1 c l^2 / 2, u = l c."""
    lam = np.asarray(lam, dtype=float)
    u = lam * c
    with np.errstate(over="ignore", invalid="ignore"):
        return lam * vbar + _times(K - K1, lam * u * f_k(u, 2)) + 0.5 * K1 * c * lam**2


def lambda_star_arrays(t, vbar, K, c) -> Tuple[np.ndarray, np.ndarray]:
    """
    Minimiser of B(l; K, 0) - l t and the curvature B''(l*; K, 0).

    l* = {r - W(K/(vbar-K) e^r)} / c with r = (K + t c)/(vbar - K). When vbar - K
    vanishes, B'(l) = t is solved by bisection instead.
    """
    t, vbar, K, c = np.broadcast_arrays(
        np.asarray(t, dtype=float),
        np.asarray(vbar, dtype=float),
        np.asarray(K, dtype=float),
        np.asarray(c, dtype=float),
    )
    gap = vbar - K
    degenerate = gap <= _DEGENERATE_RTOL * vbar

    lam = np.zeros(t.shape)
    curvature = np.array(vbar, dtype=float, copy=True)

    regular = ~degenerate
    if np.any(regular):
        g = gap[regular]
        r = (K[regular] + t[regular] * c[regular]) / g
        with np.errstate(divide="ignore"):
            log_arg = np.log(K[regular] / g) + r
        w = lambert_w0_exp(log_arg)
        lam[regular] = np.maximum((r - w) / c[regular], 0.0)
        curvature[regular] = g * (1.0 + w)

    if np.any(degenerate):
        vd, cd, td = vbar[degenerate], c[degenerate], t[degenerate]
        cfg = DEFAULT_SOLVER_CONFIG
        lam_d, _ = bisect_decreasing(
            lambda x: -dmgf_b(x, vd, vd, 0.0, cd),
            -td,
            np.where(vd > 0.0, td / np.where(vd > 0.0, vd, 1.0), 1.0),
            rtol=cfg.inversion_rtol * 1e-2,
            max_doublings=cfg.inversion_max_doublings,
            max_bisections=cfg.inversion_max_bisections,
        )
        lam_d = np.where(td > 0.0, lam_d, 0.0)
        lam[degenerate] = lam_d
        with np.errstate(over="ignore"):
            curvature[degenerate] = vd * np.exp(lam_d * cd)

    return lam, curvature


def _minimise(obj, t, vbar):
    """Golden-section minimum of a convex objective with obj(0) = 0 and minimiser <= t / vbar."""
    cfg = DEFAULT_SOLVER_CONFIG
    hi = expand_bracket(obj, t / vbar, max_doublings=cfg.inversion_max_doublings)
    lam, f = golden_section_min(obj, np.zeros_like(hi), hi, rtol=cfg.lambda_tol)
    return lam, np.minimum(f, 0.0)


def _positive_t(t) -> np.ndarray:
    return np.atleast_1d(np.asarray(t, dtype=float))


def _finish(t_in, t: np.ndarray, values: np.ndarray):
    values = np.where(t > 0.0, values, 0.0)
    if np.isscalar(t_in):
        return float(values[0])
    return values.reshape(np.shape(t_in))


def _no_variance(t: np.ndarray):
    # constant summands: S_n >= n t is impossible for t > 0
    return np.where(t > 0.0, -np.inf, 0.0)


# ---------------------------------------------------------------------
# Public bounds
# ---------------------------------------------------------------------

def B(lam, stats: SummandStats):
    """Lemma-style mgf bound B(lambda; c*, vbar, K, K1) per summand."""
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0.0):
        raise ValueError("lambda must be >= 0")
    out = mgf_b(np.atleast_1d(lam_arr), stats.vbar, stats.K, stats.K1, stats.cstar)
    if np.isscalar(lam):
        return float(out[0])
    return out.reshape(np.shape(lam))


def dB_dlambda(lam, stats: SummandStats, *, K1=None):
    """dB/dlambda; pass K1=0 for the B3 form."""
    k1 = stats.K1 if K1 is None else K1
    out = dmgf_b(np.atleast_1d(np.asarray(lam, dtype=float)), stats.vbar, stats.K, k1, stats.cstar)
    if np.isscalar(lam):
        return float(out[0])
    return out.reshape(np.shape(lam))


def lambda_star(t, stats: SummandStats):
    """Closed-form minimiser of B(lambda; K, 0) - lambda t (0 for t <= 0)."""
    t_arr = np.maximum(_positive_t(t), 0.0)
    lam, _ = lambda_star_arrays(t_arr, stats.vbar, stats.K, stats.cstar)
    if np.isscalar(t):
        return float(lam[0])
    return lam.reshape(np.shape(t))


def dlambda_dt(t, stats: SummandStats):
    """Derivative of lambda*(t) with respect to the per-summand t."""
    t_arr = np.maximum(_positive_t(t), 0.0)
    _, curvature = lambda_star_arrays(t_arr, stats.vbar, stats.K, stats.cstar)
    out = 1.0 / curvature
    if np.isscalar(t):
        return float(out[0])
    return out.reshape(np.shape(t))


def hoeffding_log_bound(t, sum_sq_ranges: float):
    """-2 t^2 / mean_sq_range; the caller supplies (1/n) sum (c_i - a_i)^2."""
    if not sum_sq_ranges > 0.0:
        raise ValueError("sum_sq_ranges must be > 0")
    t_arr = _positive_t(t)
    return _finish(t, t_arr, -2.0 * t_arr**2 / sum_sq_ranges)


def bennett_log_bound(t, stats: SummandStats):
    t_arr = _positive_t(t)
    if stats.vbar == 0.0:
        return _finish(t, t_arr, _no_variance(t_arr))
    c, v = stats.cstar, stats.vbar
    return _finish(t, t_arr, -(v / c**2) * h(c * np.maximum(t_arr, 0.0) / v))


def bernstein_log_bound(t, stats: SummandStats):
    t_arr = _positive_t(t)
    if stats.vbar == 0.0:
        return _finish(t, t_arr, _no_variance(t_arr))
    return _finish(t, t_arr, -0.5 * t_arr**2 / (stats.vbar + stats.cstar * t_arr / 3.0))


def clt_log_bound(t, stats: SummandStats):
    t_arr = _positive_t(t)
    if stats.vbar == 0.0:
        return _finish(t, t_arr, _no_variance(t_arr))
    return _finish(t, t_arr, -0.5 * t_arr**2 / stats.vbar)


def b2_log_bound(t, stats: SummandStats, *, drop_k1: bool = False):
    t_arr = _positive_t(t)
    if stats.vbar == 0.0:
        return _finish(t, t_arr, _no_variance(t_arr))
    tp = np.maximum(t_arr, 0.0)
    lam, _ = lambda_star_arrays(tp, stats.vbar, stats.K, stats.cstar)
    k1 = 0.0 if drop_k1 else stats.K1
    vals = mgf_b(lam, stats.vbar, stats.K, k1, stats.cstar) - lam * tp
    return _finish(t, t_arr, np.minimum(vals, 0.0))


def b3_log_bound(t, stats: SummandStats):
    return b2_log_bound(t, stats, drop_k1=True)


def _b1_arrays(tp: np.ndarray, stats: SummandStats):
    v, K, K1, c = stats.vbar, stats.K, stats.K1, stats.cstar
    lam_opt, f = _minimise(lambda x: mgf_b(x, v, K, K1, c) - x * tp, tp, v)
    lam_s, _ = lambda_star_arrays(tp, v, K, c)
    f_s = mgf_b(lam_s, v, K, K1, c) - lam_s * tp
    use_star = f_s < f
    return np.where(use_star, lam_s, lam_opt), np.minimum(f, np.minimum(f_s, 0.0))


def b1_log_bound(t, stats: SummandStats):
    t_arr = _positive_t(t)
    if stats.vbar == 0.0:
        return _finish(t, t_arr, _no_variance(t_arr))
    _, vals = _b1_arrays(np.maximum(t_arr, 0.0), stats)
    return _finish(t, t_arr, vals)


def B_lb_log_bound(t, stats: SummandStats):
    """Infimum of the lower envelope of B: the best any refinement of B1 can reach."""
    t_arr = _positive_t(t)
    if stats.vbar == 0.0:
        return _finish(t, t_arr, _no_variance(t_arr))
    tp = np.maximum(t_arr, 0.0)
    v, K, K1, c = stats.vbar, stats.K, stats.K1, stats.cstar
    obj = lambda x: mgf_b_lower_envelope(x, v, K, K1, c) - x * tp  # noqa: E731
    _, f = _minimise(obj, tp, v)
    lam_b1, _ = _b1_arrays(tp, stats)
    return _finish(t, t_arr, np.minimum(f, obj(lam_b1)))


def higher_order_log_bound(t, stats: SummandStats, order: int):
    """inf over lambda of the mgf bound built from K_1..K_order."""
    try:
        ks = stats.k_vector(order)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    t_arr = _positive_t(t)
    if stats.vbar == 0.0:
        return _finish(t, t_arr, _no_variance(t_arr))
    tp = np.maximum(t_arr, 0.0)
    v, K, c = stats.vbar, stats.K, stats.cstar
    obj = lambda x: mgf_b_higher(x, v, K, ks, c) - x * tp  # noqa: E731
    _, f = _minimise(obj, tp, v)
    lam_b1, _ = _b1_arrays(tp, stats)
    return _finish(t, t_arr, np.minimum(f, obj(lam_b1)))


def log_bound(family: BoundFamily, t, stats: SummandStats):
    """
    Per-summand log-probability bound (1/n) log P(S_n >= n t) for one family.

    Parameters
    ----------
    family : BoundFamily
    t : float or ndarray
        Per-summand exceedance; t <= 0 gives the trivial bound 0.
    stats : SummandStats

    Returns
    -------
    float or ndarray
    """
    if isinstance(family, str):
        family = BoundFamily.parse(family)
    tag = family.tag
    if tag == "hoeffding":
        if stats.mean_sq_range is None:
            raise ConfigError("Hoeffding bound needs mean_sq_range in the summary")
        return hoeffding_log_bound(t, stats.mean_sq_range)
    if tag == "bennett":
        return bennett_log_bound(t, stats)
    if tag == "bernstein":
        return bernstein_log_bound(t, stats)
    if tag == "clt":
        return clt_log_bound(t, stats)
    if tag == "B1":
        return b1_log_bound(t, stats)
    if tag == "B2":
        return b2_log_bound(t, stats)
    if tag == "B3":
        return b3_log_bound(t, stats)
    if tag == "B-lb":
        return B_lb_log_bound(t, stats)
    if tag == "B-higher":
        return higher_order_log_bound(t, stats, family.order)
    raise ConfigError(f"unsupported bound family {family}")


def bernstein_survival(tprime, stats: SummandStats):
    """S_Ber(t') = exp[-t'^2 / (2 (n vbar + c* t'/3))] on the summed scale, clamped to [0, 1]."""
    tp = np.atleast_1d(np.maximum(np.asarray(tprime, dtype=float), 0.0))
    denom = stats.n * stats.vbar + stats.cstar * tp / 3.0
    with np.errstate(divide="ignore", invalid="ignore"):
        expo = np.where(tp > 0.0, -0.5 * tp**2 / denom, 0.0)
    out = np.minimum(np.exp(expo), 1.0)
    if np.isscalar(tprime):
        return float(out[0])
    return out.reshape(np.shape(tprime))
