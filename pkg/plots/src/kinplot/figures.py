"""Price-vs-time figures from series CSV files.

Works purely from the emitted CSV contract: a header row naming the
columns, one numeric row per sample. Nothing here imports the simulator.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


class PlotError(Exception):
    """Bad request or malformed input series."""


class MissingColumnError(PlotError):
    """A requested column is not present in a series file."""

    def __init__(self, column: str, path):
        self.column = column
        self.path = str(path)
        super().__init__(f"column {column!r} not present in {path}")


# speculators enter at t = 10 in every bundled scenario
PRESET_BOUNDARIES = {
    "fig1-left": 10.0,
    "fig1-right": 10.0,
    "fig2-left": 10.0,
    "fig2-right": 10.0,
    "fig3-left": 10.0,
    "fig3-right": 10.0,
}


@dataclass(frozen=True)
class PlotSpec:
    """One figure: which series to draw, what to draw, where to put it."""

    inputs: tuple
    output: str
    title: str
    x_column: str = "t"
    y_column: str = "price"
    marker_time: float | None = None

    def __post_init__(self):
        if not self.inputs:
            raise PlotError("a figure needs at least one input series")
        if not str(self.output).endswith(".png"):
            raise PlotError(f"output must be a .png path, got {self.output!r}")


@dataclass(frozen=True)
class RenderResult:
    """What was drawn, with the final axis ranges read back from the axes."""

    output: str
    x_range: tuple
    y_range: tuple
    n_series: int
    n_points: int
    marker_time: float | None


def read_columns(path) -> dict:
    """Parse a series CSV into {column name: float array}."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise PlotError(f"{path} is empty, expected a header row")
        rows = list(reader)
    data = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise PlotError(f"{path} row {i + 2} has {len(row)} fields, header has {len(header)}")
        try:
            data[i] = [float(field) for field in row]
        except ValueError as exc:
            raise PlotError(f"{path} row {i + 2}: {exc}") from None
    return {name: data[:, j] for j, name in enumerate(header)}


def _column(table: dict, name: str, path) -> np.ndarray:
    if name not in table:
        raise MissingColumnError(name, path)
    return table[name]


def render_price_figure(spec: PlotSpec) -> RenderResult:
    """Draw the figure described by spec and write it as a PNG.

    Inputs are only ever read. Output bytes are stable for fixed inputs
    and a fixed renderer version.
    """
    series = []
    for path in spec.inputs:
        table = read_columns(path)
        xs = _column(table, spec.x_column, path)
        ys = _column(table, spec.y_column, path)
        series.append((Path(path).stem, xs, ys))

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    try:
        for label, xs, ys in series:
            ax.plot(xs, ys, linewidth=1.2, label=label)
        if spec.marker_time is not None:
            ax.axvline(spec.marker_time, color="0.35", linestyle="--", linewidth=1.0)
        ax.set_xlabel(spec.x_column)
        ax.set_ylabel(spec.y_column)
        ax.set_title(spec.title)
        ax.grid(alpha=0.25)
        if len(series) > 1:
            ax.legend(fontsize="small")
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=150)
        x_range = tuple(float(v) for v in ax.get_xlim())
        y_range = tuple(float(v) for v in ax.get_ylim())
    finally:
        plt.close(fig)
    return RenderResult(
        output=str(out),
        x_range=x_range,
        y_range=y_range,
        n_series=len(series),
        n_points=sum(len(xs) for _, xs, _ in series),
        marker_time=spec.marker_time,
    )


def preset_spec(preset_id: str, in_dir, out_dir, x_column="t", y_column="price") -> PlotSpec:
    """Figure spec for one preset: every matching series in in_dir, overlaid."""
    if preset_id not in PRESET_BOUNDARIES:
        known = ", ".join(sorted(PRESET_BOUNDARIES))
        raise PlotError(f"unknown preset {preset_id!r}, expected one of: {known}")
    paths = tuple(sorted(str(p) for p in Path(in_dir).glob(f"{preset_id}_*.csv")))
    if not paths:
        raise PlotError(f"no series files matching {preset_id}_*.csv in {in_dir}")
    return PlotSpec(
        inputs=paths,
        output=str(Path(out_dir) / f"{preset_id}.png"),
        title=f"{preset_id}: {y_column} vs {x_column}",
        x_column=x_column,
        y_column=y_column,
        marker_time=PRESET_BOUNDARIES[preset_id],
    )
