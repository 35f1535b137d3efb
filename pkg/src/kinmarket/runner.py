"""Execute a scenario end to end: build populations, solve, write outputs.

The seed is split into one stream for population setup and one for the
dynamics, so the initial-shape choice never shifts the collision draws.
Every run writes one series file named <scenario>_<seed>.<ext> plus, for
the particle models, histogram snapshot JSONs on the configured cadence.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig
from .errors import OutputError
from .linear_mc import LinearSimConfig, run_linear
from .meanfield import (
    EquilibriumResult,
    equilibrium_rho,
    explicit_solution,
    integrate_means,
    limit_price,
)
from .nonlinear_mc import NonlinearSimConfig, two_phase_run
from .observables import (
    ObservableRow,
    row_from_means,
    series_filename,
    snapshot_filename,
    write_series,
    write_snapshots,
)
from .population import Population


@dataclass(frozen=True)
class RunSummary:
    """What a finished scenario produced, plus the one-line verdict inputs."""

    config: ScenarioConfig
    rows: list[ObservableRow]
    terminal_price: float
    predicted_limit: float | None
    conservation_drift: float
    series_path: str | None
    snapshot_paths: list[str]
    price_error_count: int
    skipped_collisions: int
    equilibrium: EquilibriumResult | None = None

    def line(self) -> str:
        predicted = "n/a" if self.predicted_limit is None else f"{self.predicted_limit:.6g}"
        path = self.series_path or "-"
        return (
            f"{self.config.name} seed={self.config.seed} model={self.config.model} "
            f"terminal_price={self.terminal_price:.6g} predicted_limit={predicted} "
            f"drift={self.conservation_drift:.3g} price_errors={self.price_error_count} "
            f"skipped={self.skipped_collisions} -> {path}"
        )


def _build_populations(config: ScenarioConfig, rng: np.random.Generator):
    m = config.means0
    if config.init_kind == "degenerate":
        dealers = Population.degenerate("dealers", config.n_dealers, m.Mx, m.My)
        speculators = Population.degenerate("speculators", config.n_speculators, m.mx, m.my)
    else:
        dealers = Population.uniform_spread(
            "dealers", config.n_dealers, m.Mx, m.My, config.init_width, rng
        )
        speculators = Population.uniform_spread(
            "speculators", config.n_speculators, m.mx, m.my, config.init_width, rng
        )
    return dealers, speculators


def _conservation_drift(rows: list[ObservableRow]) -> float:
    if not rows:
        return 0.0
    drift = 0.0
    for attr in ("total_x", "total_y"):
        start = getattr(rows[0], attr)
        if start == 0.0:
            continue
        worst = max(abs(getattr(r, attr) - start) for r in rows)
        drift = max(drift, worst / abs(start))
    return drift


def _predicted_limit(config: ScenarioConfig) -> float | None:
    saving = config.saving
    if config.model == "explicit":
        # Hoarding case: the dealers' X settles once the speculators' Y is gone.
        total_y = config.means0.My + config.means0.my
        ratio = config.prefs.beta / config.prefs.alpha
        final_mx = config.means0.Mx * math.exp(-ratio * config.means0.my / total_y)
        return ratio * final_mx / total_y
    if saving.lambda_x > 0.0 and saving.lambda_y > 0.0:
        return limit_price(config.means0, config.prefs, saving)
    return None


def run_scenario(config: ScenarioConfig, write_outputs: bool = True) -> RunSummary:
    """Run one scenario and, unless disabled, write its output files."""
    root = np.random.SeedSequence(config.seed)
    init_seq, run_seq = root.spawn(2)
    init_rng = np.random.Generator(np.random.Philox(init_seq))
    run_rng = np.random.Generator(np.random.Philox(run_seq))

    rows: list[ObservableRow] = []
    snapshots = []
    price_errors = 0
    skipped = 0
    equilibrium = None

    if config.model == "meanfield":
        trajectory = integrate_means(
            config.means0, config.prefs, config.saving, config.t_end, config.dt
        )
        for i in range(len(trajectory)):
            rows.append(
                row_from_means(
                    trajectory.state(i), config.prefs, config.saving,
                    float(trajectory.times[i]), config.n_dealers, config.n_speculators,
                )
            )
    elif config.model == "explicit":
        n = int(round(config.t_end / config.dt))
        for k in range(n + 1):
            state, _ = explicit_solution(config.means0, config.prefs, k * config.dt)
            rows.append(
                row_from_means(
                    state, config.prefs, config.saving,
                    k * config.dt, config.n_dealers, config.n_speculators,
                )
            )
    elif config.model == "linear_mc":
        dealers, speculators = _build_populations(config, init_rng)
        result = run_linear(
            LinearSimConfig(
                prefs=config.prefs,
                saving=config.saving,
                coeff_model=config.coeff_model,
                sigma=config.sigma,
                dt=config.dt,
                t_end=config.t_end,
                seed=config.seed,
            ),
            dealers,
            speculators,
            rng=run_rng,
        )
        rows = result.rows
        price_errors = result.price_error_count
    elif config.model == "nonlinear_mc":
        dealers, speculators = _build_populations(config, init_rng)
        result = two_phase_run(
            NonlinearSimConfig(
                prefs=config.prefs,
                saving=config.saving,
                coeff_model=config.coeff_model,
                sigma=config.sigma,
                mu=config.mu,
                dt=config.dt,
                t_end=config.t_end,
                phase1_end=config.phase1_end,
                seed=config.seed,
                snapshot_every=config.snapshot_every,
            ),
            dealers,
            speculators,
            rng=run_rng,
        )
        rows = result.rows
        price_errors = result.price_error_count
        skipped = result.skipped_collisions
        snapshots = result.snapshots
    elif config.model == "equilibrium":
        equilibrium = equilibrium_rho(config.means0, config.prefs, config.saving)
    else:  # unreachable once parse_config has run
        raise ValueError(f"unknown model {config.model!r}")

    series_path = None
    snapshot_paths: list[str] = []
    if write_outputs and rows:
        try:
            os.makedirs(config.out_dir, exist_ok=True)
        except OSError as exc:
            raise OutputError(f"cannot create output directory {config.out_dir}: {exc}") from exc
        series_path = os.path.join(
            config.out_dir, series_filename(config.name, config.seed, config.out_format)
        )
        write_series(rows, series_path, config.out_format)
        by_instant: dict[float, list] = {}
        for snap in snapshots:
            by_instant.setdefault(snap.t, []).append(snap)
        for t, group in by_instant.items():
            path = os.path.join(
                config.out_dir, snapshot_filename(config.name, config.seed, t)
            )
            write_snapshots(group, path)
            snapshot_paths.append(path)

    if equilibrium is not None:
        terminal = equilibrium.limit_price
        predicted = equilibrium.limit_price
    else:
        terminal = rows[-1].price if rows else math.nan
        predicted = _predicted_limit(config)

    return RunSummary(
        config=config,
        rows=rows,
        terminal_price=terminal,
        predicted_limit=predicted,
        conservation_drift=_conservation_drift(rows),
        series_path=series_path,
        snapshot_paths=snapshot_paths,
        price_error_count=price_errors,
        skipped_collisions=skipped,
        equilibrium=equilibrium,
    )
