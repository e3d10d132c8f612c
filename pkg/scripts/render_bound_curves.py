from __future__ import annotations

import argparse
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

from floodbound.plotting.plots import plot_bound_curves


def _save(fig, outdir: Path, name: str, dpi: int = 300) -> None:
    fig.savefig(outdir / f"{name}.png", dpi=dpi, bbox_inches="tight")
    fig.savefig(outdir / f"{name}.pdf", bbox_inches="tight")


def main() -> None:
    parser = argparse.ArgumentParser(description="Render bounds_curve.csv files written by `floodbound bounds-curve`.")
    parser.add_argument("curves", nargs="+", help="bounds_curve.csv files (one panel each)")
    parser.add_argument("--t-unit", type=float, default=1.0, help="divide t by this (e.g. mean c_i)")
    parser.add_argument("--outdir", default=str(Path("exports") / "figures"))
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    n = len(args.curves)
    ncols = 2 if n > 1 else 1
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(6 * ncols, 4 * nrows), squeeze=False)
    for ax, path in zip(axes.flat, args.curves):
        curve = pd.read_csv(path)
        plot_bound_curves(curve, t_unit=args.t_unit, ax=ax, title=Path(path).parent.name)
    for ax in list(axes.flat)[n:]:
        ax.set_visible(False)

    _save(fig, outdir, "bound_curves")
    plt.close(fig)
    print("Exported bound curves to:", outdir.resolve())


if __name__ == "__main__":
    main()
