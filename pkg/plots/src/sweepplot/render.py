"""Render threshold-sweep CSV tables to static raster charts.

The input schema is the sweep CSV written by the experiments CLI: one row
per grid point with columns for the swept probability, the estimated
success rate, and Wilson interval bounds.  Rendering is a pure function of
the CSV bytes and the spec; no timestamps or other varying state end up in
the image, so reruns are byte-identical.
"""

import argparse
import csv
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

BAND_LOW = "wilson_low"
BAND_HIGH = "wilson_high"


class PlotError(ValueError):
    """Missing columns or an input with no data rows."""


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: input tables, column roles, output path."""

    csv_paths: tuple[str, ...]
    x: str = "p"
    y: str = "p_hat"
    series: str = "n"
    out: str = "sweep.png"
    log_x: bool = False


def load_rows(spec: PlotSpec) -> tuple[list[dict], bool]:
    """All rows across the inputs, plus whether every file carries bands."""
    rows: list[dict] = []
    has_bands = True
    for path in spec.csv_paths:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for col in (spec.x, spec.y, spec.series):
                if col not in header:
                    raise PlotError(f"column {col!r} missing from {path}")
            if BAND_LOW not in header or BAND_HIGH not in header:
                has_bands = False
            rows.extend(reader)
    if not rows:
        raise PlotError("no data rows")
    return rows, has_bands


def _series_order(value: str):
    try:
        return (0, float(value), "")
    except ValueError:
        return (1, 0.0, value)


def build_figure(spec: PlotSpec):
    """Figure and axes for the spec; one curve per series value.

    Separated from file output so tests can inspect scales and labels.
    """
    rows, has_bands = load_rows(spec)
    groups: dict[str, list[dict]] = {}
    for row in rows:
        groups.setdefault(row[spec.series], []).append(row)
    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=100)
    for key in sorted(groups, key=_series_order):
        pts = sorted(groups[key], key=lambda r: float(r[spec.x]))
        xs = [float(r[spec.x]) for r in pts]
        ys = [float(r[spec.y]) for r in pts]
        ax.plot(xs, ys, marker="o", label=f"{spec.series}={key}")
        if has_bands:
            low = [float(r[BAND_LOW]) for r in pts]
            high = [float(r[BAND_HIGH]) for r in pts]
            ax.fill_between(xs, low, high, alpha=0.2)
    if spec.log_x:
        ax.set_xscale("log")
    ax.set_xlabel(spec.x)
    ax.set_ylabel(spec.y)
    ax.legend()
    fig.tight_layout()
    return fig, ax


def render_sweep(spec: PlotSpec) -> str:
    """Write the chart as a PNG and return the output path."""
    fig, _ = build_figure(spec)
    try:
        fig.savefig(spec.out, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    return spec.out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Chart a sweep CSV: one curve per series value",
    )
    parser.add_argument("--csv", action="append", required=True,
                        help="input table; repeat to overlay several files")
    parser.add_argument("--x", default="p")
    parser.add_argument("--y", default="p_hat")
    parser.add_argument("--series", default="n")
    parser.add_argument("--out", required=True)
    parser.add_argument("--log-x", action="store_true", dest="log_x")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    spec = PlotSpec(
        tuple(args.csv), args.x, args.y, args.series, args.out, args.log_x
    )
    try:
        render_sweep(spec)
    except (PlotError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
