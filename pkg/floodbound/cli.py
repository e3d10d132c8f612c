"""
floodbound command-line front end.

    floodbound [-v|-vv] <command> [options]

Every command resolves a RunConfig (defaults < --config file < flags, or a previous
run's --from-manifest), validates it, runs, and writes ``manifest.json`` next to
its outputs. Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from floodbound import __version__
from floodbound.analysis.metrics import (
    bound_curve,
    default_t_grid,
    mc_reference_band,
    simulate_centred_totals,
    skewness_diagnostic,
    year_table,
)
from floodbound.analysis.returns import aggregate, write_report
from floodbound.analysis.sensitivity import run_sensitivity, write_sensitivity
from floodbound.config.defaults import MU_CAP
from floodbound.config.loader import load_config_file, load_manifest, resolve_run_config
from floodbound.errors import ConfigError, NumericalError, ValidationError
from floodbound.params.dataclasses import BoundFamily, ReplicateMatrix, RunConfig, ToyScenario
from floodbound.params.perturbation import scenario as make_scenario
from floodbound.params.toy import generate_toy
from floodbound.portfolio.bootstrap import bootstrap_scale
from floodbound.portfolio.io import load_events, load_portfolio, write_events, write_portfolio
from floodbound.simulation.export import (
    read_matrix_binary,
    read_matrix_csv,
    write_matrix_binary,
    write_matrix_csv,
)
from floodbound.simulation.pipeline import PreparedInputs, prepare_inputs, run_method
from floodbound.simulation.standard import run_standard


logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
BENCH_METHODS = (("standard", "B2"), ("direct", "B1"), ("direct", "B2"), ("sir", "B2"))


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _str_list(text: str) -> List[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


# ---------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floodbound",
        description="Conservative k-year flood-loss return levels from concentration bounds.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--from-manifest", dest="from_manifest", help="rerun from a manifest.json")
    common.add_argument("--out", help="output directory (default: .)")
    common.add_argument("--workers", type=int, help="worker processes (default: $FLOODBOUND_WORKERS or 1)")

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--portfolio", help="portfolio.csv")
    inputs.add_argument("--events", help="events.csv")
    inputs.add_argument("--n-years", dest="n_years", type=int, help="simulate years 0..n-1 (empty years included)")

    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("summarize", parents=[common, inputs], help="per-year descriptive statistics")
    p.add_argument("--with-mc", dest="with_mc", action="store_true", default=None)
    p.add_argument("--n-mc", dest="n_mc", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("bounds-curve", parents=[common, inputs], help="log-probability bound curves of one year")
    p.add_argument("--year", type=int)
    p.add_argument("--tail", choices=("upper", "lower"))
    p.add_argument("--families", type=_str_list, help="comma-separated, e.g. bennett,B1,B2,B3,clt")
    p.add_argument("--higher-order", dest="higher_order", type=int)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--n-t", dest="n_t", type=int)
    p.add_argument("--scale", type=float, help="multiply (1/n) log-bounds, e.g. 1000")
    p.add_argument("--mc", type=int, help="Monte Carlo draws for a reference band (0: none)")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("run", parents=[common, inputs], help="simulate replicate matrices and return levels")
    p.add_argument("--method", choices=("standard", "direct", "sir"))
    p.add_argument("--family")
    p.add_argument("--M", dest="M", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ks", type=_int_list)
    p.add_argument("--bootstrap-b", dest="bootstrap_B", type=int)
    p.add_argument("--binary", action="store_true", default=None, help="also write .bin matrices")
    p.add_argument("--with-baseline", dest="with_baseline", action="store_true", default=None)

    p = sub.add_parser("return-levels", parents=[common], help="return levels from matrix files")
    p.add_argument("--lower")
    p.add_argument("--upper")
    p.add_argument("--baseline")
    p.add_argument("--ks", type=_int_list)
    p.add_argument("--bootstrap-b", dest="bootstrap_B", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("sensitivity", parents=[common, inputs], help="damage-ratio perturbation study")
    p.add_argument("--scenario", choices=("P0", "P1", "P2", "P3", "P4"))
    p.add_argument("--delta", type=float)
    p.add_argument("--R", dest="R", type=int)
    p.add_argument("--M", dest="M", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ks", type=_int_list)

    p = sub.add_parser("bench", parents=[common, inputs], help="setup and simulation timings")
    p.add_argument("--M", dest="M", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("toy-gen", parents=[common], help="synthetic single-year toy portfolio")
    p.add_argument("--scenario", dest="toy_scenario", choices=("i", "ii", "iii", "iv"))
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("bootstrap", parents=[common, inputs], help="resample a portfolio to factor x its size")
    p.add_argument("--factor", type=int)
    p.add_argument("--seed", type=int)

    return parser


_NOT_CONFIG = {"verbose", "config", "from_manifest", "command"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Resolve the RunConfig of a parsed command line."""
    flags = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    if args.from_manifest:
        command, values = load_manifest(args.from_manifest)
        if command != args.command:
            raise ConfigError(f"manifest is for {command!r}, not {args.command!r}")
        # the output directory may be redirected; everything else comes from the manifest
        overrides = {"out": flags["out"]} if flags.get("out") else {}
        return resolve_run_config(args.command, values, overrides)
    file_values = load_config_file(args.config) if args.config else {}
    return resolve_run_config(args.command, file_values, flags)


# ---------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------

def _prepare(cfg: RunConfig, *, mu_cap: Optional[float] = None) -> PreparedInputs:
    return prepare_inputs(
        cfg.portfolio,
        cfg.events,
        n_years=cfg.n_years,
        higher_order=cfg.higher_order,
        mu_cap=mu_cap,
    )


def _summary_of(prepared: PreparedInputs, year: int):
    for s in prepared.summaries:
        if s.year == year:
            return s
    raise ConfigError(f"year {year} is not among the input years")


def cmd_summarize(cfg: RunConfig) -> List[Path]:
    prepared = _prepare(cfg)
    table = year_table(prepared.summaries)
    if cfg.with_mc and len(table):
        groups = prepared.events.split_by_year(prepared.years.tolist())
        diag = []
        for s in prepared.summaries:
            centred = simulate_centred_totals(groups[s.year], s.expected_total, cfg.n_mc, cfg.seed, s.year)
            diag.append(skewness_diagnostic(centred))
        table = pd.concat([table, pd.DataFrame(diag)], axis=1)

    path = Path(cfg.out) / "year_summary.csv"
    table.to_csv(path, index=False)
    print(table.to_string(index=False))
    logger.info("wrote %s (%d years)", path, len(table))
    return [path]


def cmd_bounds_curve(cfg: RunConfig) -> List[Path]:
    prepared = _prepare(cfg)
    summary = _summary_of(prepared, cfg.year)
    stats = summary.stats(cfg.tail)
    if stats is None or stats.vbar == 0.0:
        raise ValidationError(f"year {cfg.year} has no {cfg.tail}-tail variability")

    families = [BoundFamily.parse(f, default_order=cfg.higher_order) for f in cfg.families]
    if cfg.t_max is None:
        t_grid = default_t_grid(stats, cfg.n_t)
    else:
        t_grid = np.linspace(0.0, cfg.t_max, cfg.n_t)
    curve = bound_curve(stats, families, t_grid, scale=cfg.scale)

    if cfg.mc > 0:
        year_events = prepared.events.for_year(cfg.year)
        centred = simulate_centred_totals(year_events, summary.expected_total, cfg.mc, cfg.seed, cfg.year)
        band = mc_reference_band(centred, stats.n, t_grid, tail=cfg.tail, scale=cfg.scale)
        curve = curve.merge(band, on="t", how="left")

    path = Path(cfg.out) / "bounds_curve.csv"
    curve.to_csv(path, index=False)
    logger.info("wrote %s (%d families x %d points)", path, len(families), len(t_grid))
    return [path]


def _write_matrices(cfg: RunConfig, matrices: Sequence[ReplicateMatrix]) -> List[Path]:
    out = Path(cfg.out)
    paths = []
    for m in {m.method: m for m in matrices}.values():
        paths.append(write_matrix_csv(m, out / f"matrix_{m.method}.csv"))
        if cfg.binary:
            paths.append(write_matrix_binary(m, out / f"matrix_{m.method}.bin"))
    return paths


def cmd_run(cfg: RunConfig) -> List[Path]:
    prepared = _prepare(cfg)
    family = BoundFamily.parse(cfg.family, default_order=cfg.higher_order)
    lower, upper = run_method(prepared, cfg.method, cfg.M, cfg.seed, family, workers=cfg.workers)
    matrices = [lower, upper]

    baseline = None
    if cfg.with_baseline and cfg.method != "standard":
        baseline = run_standard(prepared.events, cfg.M, cfg.seed, years=prepared.years, workers=cfg.workers)
        matrices.append(baseline)

    paths = _write_matrices(cfg, matrices)
    report = aggregate(
        lower,
        upper,
        cfg.ks,
        baseline=baseline,
        bootstrap_B=cfg.bootstrap_B,
        seed=cfg.seed,
    )
    paths.extend(write_report(report, cfg.out))
    return paths


def _read_matrix(path: str) -> ReplicateMatrix:
    if Path(path).suffix == ".bin":
        return read_matrix_binary(path)
    return read_matrix_csv(path)


def cmd_return_levels(cfg: RunConfig) -> List[Path]:
    lower = _read_matrix(cfg.lower)
    upper = _read_matrix(cfg.upper)
    baseline = _read_matrix(cfg.baseline) if cfg.baseline else None
    if not np.array_equal(lower.years, upper.years):
        raise ValidationError("lower and upper matrices cover different years")
    report = aggregate(
        lower,
        upper,
        cfg.ks,
        baseline=baseline,
        bootstrap_B=cfg.bootstrap_B,
        seed=0 if cfg.seed is None else cfg.seed,
    )
    return list(write_report(report, cfg.out))


def cmd_sensitivity(cfg: RunConfig) -> List[Path]:
    prepared = _prepare(cfg, mu_cap=MU_CAP)
    scn = make_scenario(cfg.scenario, delta=cfg.delta, R=cfg.R, seed=cfg.seed)
    result = run_sensitivity(prepared, scn, cfg.M, cfg.ks, workers=cfg.workers)
    return list(write_sensitivity(result, cfg.out).values())


def cmd_bench(cfg: RunConfig) -> List[Path]:
    rows = []
    for method, family_name in BENCH_METHODS:
        family = BoundFamily.parse(family_name)
        setup, sim = [], []
        for _ in range(cfg.repeats):
            t0 = time.perf_counter()
            prepared = _prepare(cfg)
            t1 = time.perf_counter()
            run_method(prepared, method, cfg.M, cfg.seed, family, workers=cfg.workers)
            t2 = time.perf_counter()
            setup.append(t1 - t0)
            sim.append(t2 - t1)
        label = method if method == "standard" else f"{method}-{family_name}"
        ddof = 1 if cfg.repeats > 1 else 0
        rows.append((label, np.mean(setup), np.std(setup, ddof=ddof), np.mean(sim), np.std(sim, ddof=ddof)))
        logger.info("bench %s: setup %.3fs, simulation %.3fs", label, rows[-1][1], rows[-1][3])

    table = pd.DataFrame(rows, columns=["method", "setup_mean", "setup_sd", "sim_mean", "sim_sd"])
    path = Path(cfg.out) / "bench.csv"
    table.to_csv(path, index=False)
    print(table.to_string(index=False))
    return [path]


def cmd_toy_gen(cfg: RunConfig) -> List[Path]:
    portfolio, events = generate_toy(ToyScenario(tag=cfg.toy_scenario, n=cfg.n, seed=cfg.seed))
    out = Path(cfg.out)
    return [write_portfolio(portfolio, out / "portfolio.csv"), write_events(events, out / "events.csv")]


def cmd_bootstrap(cfg: RunConfig) -> List[Path]:
    portfolio = load_portfolio(cfg.portfolio)
    events = load_events(cfg.events, portfolio)
    scaled, scaled_events = bootstrap_scale(portfolio, events, cfg.factor, cfg.seed)
    out = Path(cfg.out)
    return [write_portfolio(scaled, out / "portfolio.csv"), write_events(scaled_events, out / "events.csv")]


COMMAND_HANDLERS: Dict[str, Callable[[RunConfig], List[Path]]] = {
    "summarize": cmd_summarize,
    "bounds-curve": cmd_bounds_curve,
    "run": cmd_run,
    "return-levels": cmd_return_levels,
    "sensitivity": cmd_sensitivity,
    "bench": cmd_bench,
    "toy-gen": cmd_toy_gen,
    "bootstrap": cmd_bootstrap,
}


def write_manifest(cfg: RunConfig) -> Path:
    path = Path(cfg.out) / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        cfg = config_from_args(args)
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        COMMAND_HANDLERS[cfg.command](cfg)
        write_manifest(cfg)
    except ValidationError as exc:
        logger.error("%s: %s", args.command, exc)
        return 2
    except NumericalError as exc:
        logger.error("%s: %s", args.command, exc)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
