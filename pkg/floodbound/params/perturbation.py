from __future__ import annotations

from dataclasses import replace
from typing import Optional

import numpy as np

from floodbound.config.defaults import (
    DEFAULT_SCENARIO_DELTA,
    DEFAULT_SCENARIO_R,
    MU_CAP,
    STREAM_PERTURBATION,
)
from floodbound.errors import ValidationError
from floodbound.params.dataclasses import EventTable, PerturbationScenario
from floodbound.simulation.rng import substream


def scenario(
    tag: str,
    delta: Optional[float] = None,
    R: Optional[int] = None,
    seed: int = 0,
    label: Optional[str] = None,
) -> PerturbationScenario:
    """
    Build a damage-ratio perturbation scenario with its default delta and R.

    Defaults:
      - P0: delta 0 (identity), P1-P3: 0.05, P4: 0.25
      - P0-P2 are deterministic and always use R = 1; P3/P4 default to R = 100.
    """
    tag = tag.upper()
    if tag not in DEFAULT_SCENARIO_DELTA:
        raise ValidationError(f"unknown scenario {tag!r} (expected one of {', '.join(DEFAULT_SCENARIO_DELTA)})")
    d = DEFAULT_SCENARIO_DELTA[tag] if delta is None else float(delta)

    if tag in ("P3", "P4"):
        reps = DEFAULT_SCENARIO_R if R is None else int(R)
    else:
        reps = 1

    return PerturbationScenario(
        tag=tag,
        delta=d,
        R=reps,
        seed=int(seed),
        label=label or f"{tag}(delta={d:g})",
        meta={"scenario": tag, "delta": d, "R": reps},
    )


def risk_signs(scn: PerturbationScenario, n_risks: int, replicate: int = 0) -> np.ndarray:
    """
    Perturbation sign per risk: +1 for P1, -1 for P2, a fair coin for P3/P4, 0 for P0.

    Coins are drawn once per (risk, replicate), so every event of a risk shares its sign.
    """
    if scn.tag == "P0":
        return np.zeros(n_risks)
    if scn.tag == "P1":
        return np.ones(n_risks)
    if scn.tag == "P2":
        return -np.ones(n_risks)
    rng = substream(scn.seed, STREAM_PERTURBATION, replicate)
    return np.where(rng.random(n_risks) < 0.5, 1.0, -1.0)


def perturb(events: EventTable, scn: PerturbationScenario, replicate: int = 0) -> EventTable:
    """
    Perturb expected damage ratios mu = alpha/(alpha+beta), keeping alpha+beta fixed.

    mu' = (1 + s delta) mu with the risk sign s. Where (1 + delta) mu would exceed 0.95:
      - deterministic scenarios cap mu' at 0.95
      - random scenarios take 0.95 on a + coin and 2 mu - 0.95 on a - coin
    """
    conc = events.alpha + events.beta
    mu = events.alpha / conc
    over = np.flatnonzero(mu >= MU_CAP)
    if over.size:
        i = int(over[0])
        raise ValidationError(
            f"mean damage ratio {mu[i]:.6g} >= {MU_CAP} cannot be perturbed", line=i + 2
        )
    if scn.delta == 0.0 or scn.tag == "P0" or len(events) == 0:
        return events

    n_risks = max(len(events.risk_ids), int(events.risk.max()) + 1)
    s = risk_signs(scn, n_risks, replicate)[events.risk]
    mu_new = (1.0 + s * scn.delta) * mu

    crowded = (1.0 + scn.delta) * mu > MU_CAP
    if scn.random_sign:
        mu_new = np.where(crowded, np.where(s > 0.0, MU_CAP, 2.0 * mu - MU_CAP), mu_new)
    else:
        mu_new = np.minimum(mu_new, MU_CAP)

    alpha = mu_new * conc
    return replace(events, alpha=alpha, beta=conc - alpha)
