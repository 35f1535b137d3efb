"""Per-step observables, series serialization, and histogram snapshots.

The observable row schema is a stable external contract: CSV files start
with the exact header below, JSONL files mirror the same field names, and
floats are written with 17 significant digits so a round trip through text
reproduces the bits. A clearing price that does not exist (no exposed goods
in one coordinate) is recorded as NaN and counted, never raised, so a long
run cannot die on one degenerate sample.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .core import (
    MeanState,
    Preferences,
    SavingPolicy,
    dealer_only_price,
    market_price,
)
from .errors import DomainError, OutputError, SingularMarketError

CSV_FIELDS = (
    "t", "price", "Mx", "My", "mx", "my", "W_A", "W_B",
    "var_x_A", "var_y_A", "var_x_B", "var_y_B", "total_x", "total_y",
)
CSV_HEADER = ",".join(CSV_FIELDS)


@dataclass(frozen=True)
class ObservableRow:
    """One sampling instant of a run; field order matches the CSV header."""

    t: float
    price: float
    Mx: float
    My: float
    mx: float
    my: float
    W_A: float
    W_B: float
    var_x_A: float
    var_y_A: float
    var_x_B: float
    var_y_B: float
    total_x: float
    total_y: float


def _fmt(value: float) -> str:
    # 17 significant digits round-trip any float64 exactly.
    return f"{value:.17g}"


def row_from_populations(
    dealer_x: np.ndarray,
    dealer_y: np.ndarray,
    spec_x: np.ndarray,
    spec_y: np.ndarray,
    prefs: Preferences,
    saving: SavingPolicy,
    t: float,
    speculators_active: bool = True,
) -> ObservableRow:
    """Build a row from raw holdings arrays.

    While speculators sit outside the market (two-phase warm-up) the price
    is the dealer-only clearing price; afterwards it weighs the speculator
    means by the saving fractions. A singular market yields price NaN.
    """
    Mx = float(np.mean(dealer_x))
    My = float(np.mean(dealer_y))
    mx = float(np.mean(spec_x))
    my = float(np.mean(spec_y))
    means = MeanState(Mx=Mx, My=My, mx=mx, my=my)
    try:
        if speculators_active:
            price = market_price(means, saving, prefs)
        else:
            price = dealer_only_price(means, prefs)
    except SingularMarketError:
        price = math.nan
    return ObservableRow(
        t=t,
        price=price,
        Mx=Mx,
        My=My,
        mx=mx,
        my=my,
        W_A=Mx + price * My,
        W_B=mx + price * my,
        var_x_A=float(np.var(dealer_x)),
        var_y_A=float(np.var(dealer_y)),
        var_x_B=float(np.var(spec_x)),
        var_y_B=float(np.var(spec_y)),
        total_x=float(np.sum(dealer_x) + np.sum(spec_x)),
        total_y=float(np.sum(dealer_y) + np.sum(spec_y)),
    )


def row_from_means(
    means: MeanState,
    prefs: Preferences,
    saving: SavingPolicy,
    t: float,
    n_dealers: int,
    n_speculators: int,
) -> ObservableRow:
    """Row for a mean-field sample: zero variances, totals scaled by counts."""
    try:
        price = market_price(means, saving, prefs)
    except SingularMarketError:
        price = math.nan
    return ObservableRow(
        t=t,
        price=price,
        Mx=means.Mx,
        My=means.My,
        mx=means.mx,
        my=means.my,
        W_A=means.Mx + price * means.My,
        W_B=means.mx + price * means.my,
        var_x_A=0.0,
        var_y_A=0.0,
        var_x_B=0.0,
        var_y_B=0.0,
        total_x=n_dealers * means.Mx + n_speculators * means.mx,
        total_y=n_dealers * means.My + n_speculators * means.my,
    )


class SeriesRecorder:
    """Accumulates rows and counts the samples whose price was singular."""

    def __init__(self):
        self.rows: list[ObservableRow] = []
        self.price_error_count = 0

    def add(self, row: ObservableRow) -> None:
        if math.isnan(row.price):
            self.price_error_count += 1
        self.rows.append(row)


def write_series(rows: list[ObservableRow], path, fmt: str = "csv") -> None:
    """Write rows as CSV (pinned header) or JSONL (same field names)."""
    if fmt not in ("csv", "jsonl"):
        raise DomainError(f"format must be 'csv' or 'jsonl', got {fmt!r}")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            if fmt == "csv":
                fh.write(CSV_HEADER + "\n")
                for row in rows:
                    fh.write(",".join(_fmt(getattr(row, name)) for name in CSV_FIELDS) + "\n")
            else:
                for row in rows:
                    record = {
                        name: (None if math.isnan(v) else v)
                        for name, v in ((f, getattr(row, f)) for f in CSV_FIELDS)
                    }
                    fh.write(json.dumps(record) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write series to {path}: {exc}") from exc


def read_series(path) -> list[ObservableRow]:
    """Read back a series file; the extension decides the format."""
    text_path = str(path)
    rows: list[ObservableRow] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            if text_path.endswith(".jsonl"):
                for line in fh:
                    if not line.strip():
                        continue
                    record = json.loads(line)
                    rows.append(
                        ObservableRow(
                            **{
                                name: (math.nan if record[name] is None else float(record[name]))
                                for name in CSV_FIELDS
                            }
                        )
                    )
            else:
                header = fh.readline().rstrip("\n")
                if header != CSV_HEADER:
                    raise DomainError(f"unexpected CSV header in {path}: {header!r}")
                for line in fh:
                    if not line.strip():
                        continue
                    values = line.rstrip("\n").split(",")
                    if len(values) != len(CSV_FIELDS):
                        raise DomainError(f"malformed CSV row in {path}: {line!r}")
                    rows.append(ObservableRow(*(float(v) for v in values)))
    except OSError as exc:
        raise OutputError(f"cannot read series from {path}: {exc}") from exc
    return rows


@dataclass(frozen=True)
class HistogramSnapshot:
    """Binned view of one population at one instant.

    counts is bins_x rows by bins_y columns; agents outside the ranges are
    clipped into the boundary bins so the total count is preserved. The
    ratio histogram bins y/x over the agents with x > 0 only.
    """

    t: float
    label: str
    x_edges: list[float]
    y_edges: list[float]
    counts: list[list[int]]
    ratio_edges: list[float]
    ratio_counts: list[int]
    n_agents: int
    n_ratio: int


def snapshot_histogram(
    x: np.ndarray,
    y: np.ndarray,
    t: float,
    label: str,
    bins: int = 50,
    x_range: tuple[float, float] | None = None,
    y_range: tuple[float, float] | None = None,
    ratio_range: tuple[float, float] | None = None,
) -> HistogramSnapshot:
    """Histogram a population's holdings and its y/x ratio."""
    if bins < 1:
        raise DomainError(f"bins must be at least 1, got {bins}")
    x_range = x_range or _data_range(x)
    y_range = y_range or _data_range(y)
    xc = np.clip(x, *x_range)
    yc = np.clip(y, *y_range)
    counts, x_edges, y_edges = np.histogram2d(xc, yc, bins=bins, range=(x_range, y_range))

    positive = x > 0
    ratios = y[positive] / x[positive]
    if ratios.size:
        ratio_range = ratio_range or _data_range(ratios)
        ratio_counts, ratio_edges = np.histogram(
            np.clip(ratios, *ratio_range), bins=bins, range=ratio_range
        )
    else:
        ratio_range = ratio_range or (0.0, 1.0)
        ratio_counts, ratio_edges = np.histogram(ratios, bins=bins, range=ratio_range)
    return HistogramSnapshot(
        t=t,
        label=label,
        x_edges=[float(v) for v in x_edges],
        y_edges=[float(v) for v in y_edges],
        counts=counts.astype(int).tolist(),
        ratio_edges=[float(v) for v in ratio_edges],
        ratio_counts=ratio_counts.astype(int).tolist(),
        n_agents=int(x.size),
        n_ratio=int(ratios.size),
    )


def _data_range(values: np.ndarray) -> tuple[float, float]:
    lo = float(np.min(values)) if values.size else 0.0
    hi = float(np.max(values)) if values.size else 1.0
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def write_snapshots(snapshots: list[HistogramSnapshot], path) -> None:
    """Write the snapshots of one instant (one per population) as JSON."""
    if not snapshots:
        raise DomainError("nothing to write: empty snapshot list")
    if len({s.t for s in snapshots}) != 1:
        raise DomainError("snapshots in one file must share the instant")
    payload = {"t": snapshots[0].t, "populations": {s.label: asdict(s) for s in snapshots}}
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write histogram to {path}: {exc}") from exc


def read_snapshots(path) -> dict[str, HistogramSnapshot]:
    """Read one instant's snapshot file back, keyed by population label."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise OutputError(f"cannot read histogram from {path}: {exc}") from exc
    names = {f.name for f in fields(HistogramSnapshot)}
    out = {}
    for label, data in payload["populations"].items():
        out[label] = HistogramSnapshot(**{k: v for k, v in data.items() if k in names})
    return out


def series_filename(scenario: str, seed: int, fmt: str = "csv") -> str:
    ext = "csv" if fmt == "csv" else "jsonl"
    return f"{scenario}_{seed}.{ext}"


def snapshot_filename(scenario: str, seed: int, t: float) -> str:
    return f"{scenario}_{seed}_hist_{t:g}.json"
