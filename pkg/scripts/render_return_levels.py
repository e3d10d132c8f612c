from __future__ import annotations

import argparse
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

from floodbound.plotting.plots import plot_return_levels, plot_sensitivity_boxplots


def _save(fig, outdir: Path, name: str, dpi: int = 300) -> None:
    fig.savefig(outdir / f"{name}.png", dpi=dpi, bbox_inches="tight")
    fig.savefig(outdir / f"{name}.pdf", bbox_inches="tight")


def main() -> None:
    parser = argparse.ArgumentParser(description="Render return-level and sensitivity outputs.")
    parser.add_argument("--report", help="return_levels.csv from `floodbound run` or `return-levels`")
    parser.add_argument("--samples", help="sensitivity_samples.csv from `floodbound sensitivity`")
    parser.add_argument("--baseline-samples", help="sensitivity_samples.csv of the unperturbed run (P0)")
    parser.add_argument("--k", type=int, default=200, help="return period of the boxplots")
    parser.add_argument("--outdir", default=str(Path("exports") / "figures"))
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    if args.report:
        report = pd.read_csv(args.report)
        has_baseline = not report["baseline_point"].isna().all()
        fig, axes = plt.subplots(2 if has_baseline else 1, 1, figsize=(7, 8 if has_baseline else 4), squeeze=False)
        plot_return_levels(report, ax=axes[0, 0])
        if has_baseline:
            plot_return_levels(report, relative=True, ax=axes[1, 0])
        _save(fig, outdir, "return_levels")
        plt.close(fig)

    if args.samples:
        samples = pd.read_csv(args.samples)
        baseline = pd.read_csv(args.baseline_samples) if args.baseline_samples else None
        fig, ax = plt.subplots(figsize=(10, 4))
        plot_sensitivity_boxplots(samples, k=args.k, baseline=baseline, ax=ax)
        _save(fig, outdir, f"sensitivity_boxplots_k{args.k}")
        plt.close(fig)

    print("Exported figures to:", outdir.resolve())


if __name__ == "__main__":
    main()
