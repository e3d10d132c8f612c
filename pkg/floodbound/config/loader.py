"""
Run-configuration resolution: defaults < config file < command-line flags.

Config files are TOML documents of flat ``key = value`` pairs named like the
``RunConfig`` fields; an optional ``[sensitivity]`` table holds
``scenario``, ``delta`` and ``R``.
"""

from __future__ import annotations

import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from floodbound.config.defaults import DEFAULT_SCENARIO_DELTA, DIRECT_FAMILIES
from floodbound.errors import ConfigError
from floodbound.params.dataclasses import BoundFamily, RunConfig
from floodbound.simulation.parallel import default_workers


logger = logging.getLogger(__name__)

COMMANDS = (
    "summarize",
    "bounds-curve",
    "run",
    "return-levels",
    "sensitivity",
    "bench",
    "toy-gen",
    "bootstrap",
)
METHODS = ("standard", "direct", "sir")
_FIELDS = {f.name for f in fields(RunConfig)} - {"command", "meta"}
_SENSITIVITY_KEYS = {"scenario", "delta", "R"}
_NEEDS_INPUTS = ("summarize", "bounds-curve", "run", "sensitivity", "bench", "bootstrap")
_NEEDS_SEED = ("run", "sensitivity", "bench", "toy-gen", "bootstrap")


def load_config_file(path) -> Dict[str, Any]:
    """Parse a TOML config file into flat RunConfig keys."""
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {p}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from exc

    values: Dict[str, Any] = {}
    for key, value in doc.items():
        if key == "sensitivity":
            if not isinstance(value, dict):
                raise ConfigError(f"{p}: [sensitivity] must be a table")
            unknown = set(value) - _SENSITIVITY_KEYS
            if unknown:
                raise ConfigError(f"{p}: unknown [sensitivity] keys: {', '.join(sorted(unknown))}")
            values.update(value)
        elif key.replace("-", "_") in _FIELDS:
            values[key.replace("-", "_")] = value
        else:
            raise ConfigError(f"{p}: unknown config key {key!r}")
    return values


def load_manifest(path) -> Tuple[str, Dict[str, Any]]:
    """(command, config values) from a manifest.json written by a previous run."""
    p = Path(path)
    try:
        with open(p, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"manifest not found: {p}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid manifest: {exc}") from exc
    if not isinstance(doc, dict) or "command" not in doc or "config" not in doc:
        raise ConfigError(f"{p}: manifest needs 'command' and 'config'")
    return str(doc["command"]), dict(doc["config"])


def _coerce(values: Mapping[str, Any]) -> Dict[str, Any]:
    out = dict(values)
    for key in ("ks", "families"):
        if key in out and out[key] is not None:
            seq = out[key]
            if isinstance(seq, str):
                seq = [s for s in seq.split(",") if s.strip()]
            out[key] = tuple(int(k) for k in seq) if key == "ks" else tuple(str(f).strip() for f in seq)
    return out


def validate_run_config(cfg: RunConfig) -> None:
    """Reject unusable configurations before any computation."""
    cmd = cfg.command
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")
    if cfg.M < 1:
        raise ConfigError("M must be >= 1")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if not cfg.ks or any(k < 2 for k in cfg.ks):
        raise ConfigError("return periods ks must all be >= 2")
    if cfg.bootstrap_B < 0:
        raise ConfigError("bootstrap_B must be >= 0")
    if cfg.higher_order < 1:
        raise ConfigError("higher_order must be >= 1")
    if cfg.n_years is not None and cfg.n_years < 0:
        raise ConfigError("n_years must be >= 0")

    if cmd in _NEEDS_INPUTS and (not cfg.portfolio or not cfg.events):
        raise ConfigError(f"{cmd} needs --portfolio and --events")
    if cmd in _NEEDS_SEED and cfg.seed is None:
        raise ConfigError(f"{cmd} needs --seed")

    if cmd == "summarize" and cfg.with_mc:
        if cfg.seed is None:
            raise ConfigError("summarize --with-mc needs --seed")
        if cfg.n_mc < 3:
            raise ConfigError("n_mc must be >= 3")

    if cmd == "run":
        if cfg.method not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}")
        try:
            family = BoundFamily.parse(cfg.family, default_order=cfg.higher_order)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if cfg.method == "sir" and family.tag != "B2":
            raise ConfigError(f"SIR sampling requires family B2 (got {family})")
        if cfg.method == "direct" and family.tag not in DIRECT_FAMILIES:
            raise ConfigError(f"direct sampling supports {', '.join(DIRECT_FAMILIES)}; got {family}")

    if cmd == "bounds-curve":
        if cfg.year is None:
            raise ConfigError("bounds-curve needs --year")
        if cfg.tail not in ("upper", "lower"):
            raise ConfigError("tail must be 'upper' or 'lower'")
        for name in cfg.families:
            try:
                BoundFamily.parse(name, default_order=cfg.higher_order)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if cfg.n_t < 2:
            raise ConfigError("n_t must be >= 2")
        if cfg.t_max is not None and not cfg.t_max > 0.0:
            raise ConfigError("t_max must be > 0")
        if not cfg.scale > 0.0:
            raise ConfigError("scale must be > 0")
        if cfg.mc < 0:
            raise ConfigError("mc must be >= 0")
        if cfg.mc > 0 and cfg.seed is None:
            raise ConfigError("bounds-curve --mc needs --seed")

    if cmd == "return-levels" and (not cfg.lower or not cfg.upper):
        raise ConfigError("return-levels needs --lower and --upper")

    if cmd == "sensitivity":
        if cfg.scenario.upper() not in DEFAULT_SCENARIO_DELTA:
            raise ConfigError(f"scenario must be one of {', '.join(DEFAULT_SCENARIO_DELTA)}")
        if cfg.delta is not None and not 0.0 <= cfg.delta < 1.0:
            raise ConfigError("delta must lie in [0, 1)")
        if cfg.R is not None and cfg.R < 1:
            raise ConfigError("R must be >= 1")

    if cmd == "bench" and cfg.repeats < 1:
        raise ConfigError("repeats must be >= 1")
    if cmd == "toy-gen":
        if cfg.toy_scenario not in ("i", "ii", "iii", "iv"):
            raise ConfigError("toy scenario must be one of i, ii, iii, iv")
        if cfg.n < 1:
            raise ConfigError("n must be >= 1")
    if cmd == "bootstrap" and cfg.factor < 1:
        raise ConfigError("factor must be >= 1")


def resolve_run_config(
    command: str,
    file_values: Optional[Mapping[str, Any]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    Merge config-file values and flags over the RunConfig defaults and validate.

    ``overrides`` entries that are None are treated as not given.
    """
    merged: Dict[str, Any] = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            if value is not None:
                merged[key] = value
    if "workers" not in merged:
        merged["workers"] = default_workers()

    try:
        cfg = RunConfig(command=command, **_coerce(merged))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    validate_run_config(cfg)
    logger.debug("resolved %s config: %s", command, cfg)
    return cfg
