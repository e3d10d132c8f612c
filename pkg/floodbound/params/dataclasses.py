from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterator, Mapping, Optional, Sequence, Tuple

import numpy as np

from floodbound import __version__
from floodbound.errors import ValidationError


ArrayLike = np.ndarray

# Relative slack allowed on the K1 <= K <= vbar chain (summaries are accumulated sums).
_CHAIN_RTOL = 1e-9


@dataclass(frozen=True)
class SummandStats:
    """
    Summary statistics of the n centred summands of one year and one tail.

    Units:
      - vbar, K, K1, Kj: currency^2 per summand
      - cstar, mean_sq_range: currency / currency^2

    Notes:
      - K  = (1/n) sum sigma_i^2 (c_i/c*)
      - K1 = (1/n) sum sigma_i^2 (c_i/c*)(1 - c_i/c*)
      - Kj holds K_2..K_J, same form with (1 - (c_i/c*)^j).
      - mean_sq_range = (1/n) sum (c_i - a_i)^2, only needed by Hoeffding.
    """

    n: int
    vbar: float
    K: float
    K1: float
    cstar: float
    Kj: Tuple[float, ...] = ()
    mean_sq_range: Optional[float] = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.cstar > 0.0:
            raise ValueError("cstar must be > 0")
        if self.vbar < 0.0:
            raise ValueError("vbar must be >= 0")
        slack = _CHAIN_RTOL * max(self.vbar, 0.0)
        if self.K1 < -slack or self.K1 > self.K + slack or self.K > self.vbar + slack:
            raise ValueError("summaries must satisfy 0 <= K1 <= K <= vbar")
        prev = self.K1
        for kj in self.Kj:
            if kj < prev - slack or kj > self.K + slack:
                raise ValueError("Kj must be nondecreasing in j and each <= K")
            prev = kj

    @property
    def order(self) -> int:
        """Highest available K index (1 when only K1 is known)."""
        return 1 + len(self.Kj)

    def k_vector(self, order: int) -> Tuple[float, ...]:
        """Return (K_1, ..., K_order)."""
        if order < 1:
            raise ValueError("order must be >= 1")
        if order > self.order:
            raise ValueError(f"K_{order} not available (summaries computed up to K_{self.order})")
        return (self.K1,) + tuple(self.Kj[: order - 1])


_FAMILY_TAGS = ("hoeffding", "bennett", "B1", "B2", "B3", "bernstein", "clt", "B-lb", "B-higher")
_HIGHER_RE = re.compile(r"^B-higher(?:\((\d+)\))?$")


@dataclass(frozen=True)
class BoundFamily:
    """
    Concentration-bound family tag.

    ``order`` is only used by ``B-higher`` and is the highest K index used
    (order 1 reproduces B1).
    """

    tag: str
    order: Optional[int] = None

    def __post_init__(self) -> None:
        if self.tag not in _FAMILY_TAGS:
            raise ValueError(f"unknown bound family {self.tag!r}")
        if self.tag == "B-higher":
            if self.order is None or self.order < 1:
                raise ValueError("B-higher needs an order >= 1")
        elif self.order is not None:
            raise ValueError(f"family {self.tag!r} takes no order")

    @property
    def name(self) -> str:
        if self.tag == "B-higher":
            return f"B-higher({self.order})"
        return self.tag

    @classmethod
    def parse(cls, text: str, default_order: int = 3) -> "BoundFamily":
        """Parse names like ``B2``, ``bennett``, ``CLT``, ``B-higher(3)``."""
        raw = text.strip()
        m = _HIGHER_RE.match(raw)
        if m:
            return cls("B-higher", int(m.group(1)) if m.group(1) else default_order)
        lowered = raw.lower()
        aliases = {
            "hoeffding": "hoeffding",
            "bennett": "bennett",
            "bernstein": "bernstein",
            "clt": "clt",
            "clt-approx": "clt",
            "b1": "B1",
            "b2": "B2",
            "b3": "B3",
            "b-lb": "B-lb",
            "blb": "B-lb",
        }
        if lowered not in aliases:
            raise ValueError(f"unknown bound family {text!r}")
        return cls(aliases[lowered])

    def __str__(self) -> str:
        return self.name


HOEFFDING = BoundFamily("hoeffding")
BENNETT = BoundFamily("bennett")
B1 = BoundFamily("B1")
B2 = BoundFamily("B2")
B3 = BoundFamily("B3")
BERNSTEIN = BoundFamily("bernstein")
CLT = BoundFamily("clt")
B_LB = BoundFamily("B-lb")


@dataclass(frozen=True)
class SolverConfig:
    """
    Numerical settings of the bound kernel and the samplers.

    This controls tolerances and iteration caps, without embedding any bound formulas.
    """

    fk_switch: float = 0.5
    series_rtol: float = 1e-17
    lambda_tol: float = 1e-10
    lambert_max_iter: int = 10
    inversion_rtol: float = 1e-10
    inversion_max_doublings: int = 200
    inversion_max_bisections: int = 400


@dataclass(frozen=True)
class LossTerm:
    """
    One (year, event, risk) loss distribution.

    Each of the n_sub subrisks loses exposure * Beta(alpha, beta) with probability p.
    """

    year: int
    event: int
    risk_id: str
    p: float
    alpha: float
    beta: float
    exposure: float
    n_sub: int = 1

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if not (self.alpha > 0.0 and self.beta > 0.0):
            raise ValueError("alpha and beta must be > 0")
        if not self.exposure > 0.0:
            raise ValueError("exposure must be > 0")
        if self.n_sub < 1:
            raise ValueError("n_sub must be >= 1")


@dataclass(frozen=True)
class Portfolio:
    """Risks with their total insured values b_r and subrisk counts."""

    risk_id: np.ndarray  # object array of str
    total_insured_value: np.ndarray
    n_subrisks: np.ndarray

    def __len__(self) -> int:
        return int(self.risk_id.shape[0])

    @property
    def exposure(self) -> np.ndarray:
        """Per-subrisk value b_r / n_r."""
        return self.total_insured_value / self.n_subrisks

    @property
    def total_subrisks(self) -> int:
        return int(np.sum(self.n_subrisks))

    def index_of(self) -> Dict[str, int]:
        return {rid: i for i, rid in enumerate(self.risk_id.tolist())}


@dataclass(frozen=True)
class EventTable:
    """
    Columnar event-loss table: one row per (year, event, risk).

    ``risk`` holds indices into the owning Portfolio; exposure and n_sub are
    copied from it at load time so the table is self-contained.
    """

    year: np.ndarray
    event: np.ndarray
    risk: np.ndarray
    p: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    exposure: np.ndarray
    n_sub: np.ndarray
    risk_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=object))

    def __len__(self) -> int:
        return int(self.year.shape[0])

    @property
    def years(self) -> np.ndarray:
        """Distinct years present, sorted."""
        return np.unique(self.year)

    def take(self, rows: np.ndarray) -> "EventTable":
        return EventTable(
            year=self.year[rows],
            event=self.event[rows],
            risk=self.risk[rows],
            p=self.p[rows],
            alpha=self.alpha[rows],
            beta=self.beta[rows],
            exposure=self.exposure[rows],
            n_sub=self.n_sub[rows],
            risk_ids=self.risk_ids,
        )

    def for_year(self, year: int) -> "EventTable":
        return self.take(np.flatnonzero(self.year == year))

    def split_by_year(self, years: Optional[Sequence[int]] = None) -> Dict[int, "EventTable"]:
        """Group rows by year; requested years with no rows map to empty tables."""
        order = np.argsort(self.year, kind="stable")
        sorted_years = self.year[order]
        present, starts = np.unique(sorted_years, return_index=True)
        bounds = list(starts[1:]) + [len(order)]
        groups = {int(y): self.take(order[s:e]) for y, s, e in zip(present, starts, bounds)}
        if years is None:
            return groups
        empty = self.take(np.empty(0, dtype=np.int64))
        return {int(y): groups.get(int(y), empty) for y in years}

    def to_terms(self) -> Iterator[LossTerm]:
        for i in range(len(self)):
            yield LossTerm(
                year=int(self.year[i]),
                event=int(self.event[i]),
                risk_id=str(self.risk_ids[self.risk[i]]) if len(self.risk_ids) else str(self.risk[i]),
                p=float(self.p[i]),
                alpha=float(self.alpha[i]),
                beta=float(self.beta[i]),
                exposure=float(self.exposure[i]),
                n_sub=int(self.n_sub[i]),
            )

    @classmethod
    def from_terms(cls, terms: Sequence[LossTerm]) -> "EventTable":
        ids = sorted({t.risk_id for t in terms})
        index = {rid: i for i, rid in enumerate(ids)}
        return cls(
            year=np.array([t.year for t in terms], dtype=np.int64),
            event=np.array([t.event for t in terms], dtype=np.int64),
            risk=np.array([index[t.risk_id] for t in terms], dtype=np.int64),
            p=np.array([t.p for t in terms], dtype=float),
            alpha=np.array([t.alpha for t in terms], dtype=float),
            beta=np.array([t.beta for t in terms], dtype=float),
            exposure=np.array([t.exposure for t in terms], dtype=float),
            n_sub=np.array([t.n_sub for t in terms], dtype=np.int64),
            risk_ids=np.array(ids, dtype=object),
        )


@dataclass(frozen=True)
class TermMoments:
    """Moments and support bounds of the centred per-subrisk summand (scalars or arrays)."""

    mean: Any
    variance: Any
    c_upper: Any
    c_lower: Any
    a_lower: Any


@dataclass(frozen=True)
class YearSummary:
    """
    Per-year aggregates for both tails plus the descriptive statistics of the year.

    ``upper``/``lower`` are None for a degenerate (empty) year, whose total loss is 0.
    """

    year: int
    n: int
    expected_total: float
    upper: Optional[SummandStats]
    lower: Optional[SummandStats]
    n_ev: int = 0
    n_p_gt_0: int = 0
    p_bar: float = float("nan")
    mu_bar: float = float("nan")

    @property
    def degenerate(self) -> bool:
        return self.n == 0

    def stats(self, tail: str) -> Optional[SummandStats]:
        if tail == "upper":
            return self.upper
        if tail == "lower":
            return self.lower
        raise ValueError("tail must be 'upper' or 'lower'")


@dataclass(frozen=True)
class ToyScenario:
    """Synthetic single-year portfolio of scaled Bernoulli summands."""

    tag: str
    n: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.tag not in ("i", "ii", "iii", "iv"):
            raise ValueError("toy scenario tag must be one of i, ii, iii, iv")
        if self.n < 1:
            raise ValueError("n must be >= 1")


SCENARIO_TAGS = ("P0", "P1", "P2", "P3", "P4")


@dataclass(frozen=True)
class PerturbationScenario:
    """
    Damage-ratio perturbation.

    Notes:
      - P0: identity; P1: mu' = (1+delta) mu; P2: mu' = (1-delta) mu.
      - P3/P4: per-risk fair coin per replicate, P4 with a larger delta.
    """

    tag: str
    delta: float = 0.0
    R: int = 1
    seed: int = 0
    label: str = ""
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.tag not in SCENARIO_TAGS:
            raise ValidationError(f"unknown scenario {self.tag!r} (expected one of {', '.join(SCENARIO_TAGS)})")
        if not 0.0 <= self.delta < 1.0:
            raise ValidationError("delta must lie in [0, 1)")
        if self.R < 1:
            raise ValidationError("R must be >= 1")
        if not self.random_sign and self.R != 1:
            raise ValidationError(f"{self.tag} is deterministic and needs R = 1")

    @property
    def random_sign(self) -> bool:
        return self.tag in ("P3", "P4")


@dataclass(frozen=True)
class ReplicateMatrix:
    """M x n_years grid of simulated yearly totals with its provenance."""

    values: np.ndarray
    years: np.ndarray
    method: str
    seed: int

    @property
    def M(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_years(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class RunConfig:
    """
    Fully resolved command configuration (defaults < config file < flags).

    Every field is echoed into ``manifest.json``.
    """

    command: str
    portfolio: Optional[str] = None
    events: Optional[str] = None
    n_years: Optional[int] = None
    out: str = "."
    method: str = "sir"
    family: str = "B2"
    M: int = 1000
    seed: Optional[int] = None
    ks: Tuple[int, ...] = (2, 5, 10, 20, 50, 100, 200, 500)
    workers: int = 1
    bootstrap_B: int = 200
    higher_order: int = 3
    binary: bool = False
    with_baseline: bool = False
    # summarize
    with_mc: bool = False
    n_mc: int = 20_000
    # bounds-curve
    year: Optional[int] = None
    tail: str = "upper"
    families: Tuple[str, ...] = ("bennett", "B1", "B2", "B3", "clt")
    t_max: Optional[float] = None
    n_t: int = 50
    mc: int = 0
    scale: float = 1.0
    # return-levels
    lower: Optional[str] = None
    upper: Optional[str] = None
    baseline: Optional[str] = None
    # sensitivity
    scenario: str = "P0"
    delta: Optional[float] = None
    R: Optional[int] = None
    # bench
    repeats: int = 10
    # toy-gen / bootstrap
    toy_scenario: str = "ii"
    n: int = 100_000
    factor: int = 10
    meta: Mapping[str, Any] = field(default_factory=dict)

    def to_manifest(self) -> Dict[str, Any]:
        cfg = asdict(self)
        cfg.pop("meta", None)
        cfg.pop("command", None)
        cfg["ks"] = list(self.ks)
        cfg["families"] = list(self.families)
        return {"command": self.command, "version": __version__, "config": cfg}
