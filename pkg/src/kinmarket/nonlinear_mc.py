"""Binary-collision Monte Carlo for the nonlinear market model.

Trades happen between sampled pairs instead of against the mean field: a
dealer-dealer collision clears the two partners' pooled holdings, a
dealer-speculator collision clears the dealer's holdings pooled with the
speculator's exposed fractions. Both partners of a collision share one
coefficient draw, which makes the pairwise sum of each good exact to
rounding, so global totals are conserved pathwise.

The two-phase experiment starts the market with dealers only; speculators
join at phase1_end. Expected collision counts per step are sigma*dt*N_A/2
dealer-dealer and mu*dt*N_B mixed, realized by stochastic rounding. Pairs
are drawn uniformly, distinct within a collision, with replacement across
collisions, and are processed sequentially; permuting the agent order
therefore changes the realized path for a fixed seed (only the law is
permutation invariant).

Randomness is consumed in a fixed order per step: one uniform for the
dealer-dealer count, the pair index arrays, the shared coefficient arrays
(uniform mode only); then the same sequence for mixed collisions while
speculators are active.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .core import (
    CoefficientModel,
    GoodsPair,
    Preferences,
    SavingPolicy,
    sample_coefficients_array,
)
from .errors import ConfigurationError, DegenerateCollisionError
from .observables import (
    HistogramSnapshot,
    ObservableRow,
    SeriesRecorder,
    row_from_populations,
    snapshot_histogram,
)
from .population import Population


def stochastic_round(value: float, rng: np.random.Generator) -> int:
    """Round up with probability equal to the fractional part.

    Always consumes exactly one uniform so the stream layout does not
    depend on the value.
    """
    base = math.floor(value)
    return base + (rng.random() < value - base)


def dd_collision(
    a: GoodsPair, b: GoodsPair, alpha_w: float, beta_w: float
) -> tuple[GoodsPair, GoodsPair]:
    """One dealer-dealer trade; both partners share the coefficient draw."""
    sum_x = a.x + b.x
    sum_y = a.y + b.y
    if sum_x <= 0.0 or sum_y <= 0.0:
        raise DegenerateCollisionError(
            f"pooled goods ({sum_x}, {sum_y}) leave nothing to trade"
        )
    ratio = sum_x / sum_y
    inv = sum_y / sum_x
    return (
        GoodsPair(a.x + beta_w * (ratio * a.y - a.x), a.y + alpha_w * (inv * a.x - a.y)),
        GoodsPair(b.x + beta_w * (ratio * b.y - b.x), b.y + alpha_w * (inv * b.x - b.y)),
    )


def ds_collision(
    dealer: GoodsPair,
    spec: GoodsPair,
    saving: SavingPolicy,
    alpha_w: float,
    beta_w: float,
) -> tuple[GoodsPair, GoodsPair]:
    """One dealer-speculator trade; the speculator exposes saved fractions.

    With saving fractions (1, 1) this reduces bit-for-bit to dd_collision.
    """
    lx, ly = saving.lambda_x, saving.lambda_y
    sum_x = dealer.x + lx * spec.x
    sum_y = dealer.y + ly * spec.y
    if sum_x <= 0.0 or sum_y <= 0.0:
        raise DegenerateCollisionError(
            f"pooled exposed goods ({sum_x}, {sum_y}) leave nothing to trade"
        )
    ratio = sum_x / sum_y
    inv = sum_y / sum_x
    return (
        GoodsPair(
            dealer.x + beta_w * (ratio * dealer.y - dealer.x),
            dealer.y + alpha_w * (inv * dealer.x - dealer.y),
        ),
        GoodsPair(
            spec.x + beta_w * (ratio * (ly * spec.y) - lx * spec.x),
            spec.y + alpha_w * (inv * (lx * spec.x) - ly * spec.y),
        ),
    )


def dd_collide_arrays(xa, ya, xb, yb, alpha_w, beta_w):
    """Vectorized dealer-dealer collisions.

    Returns the four updated arrays plus the mask of degenerate collisions,
    which pass through unchanged.
    """
    sum_x = xa + xb
    sum_y = ya + yb
    degenerate = (sum_x <= 0.0) | (sum_y <= 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = sum_x / sum_y
        inv = sum_y / sum_x
        xa2 = xa + beta_w * (ratio * ya - xa)
        ya2 = ya + alpha_w * (inv * xa - ya)
        xb2 = xb + beta_w * (ratio * yb - xb)
        yb2 = yb + alpha_w * (inv * xb - yb)
    return (
        np.where(degenerate, xa, xa2),
        np.where(degenerate, ya, ya2),
        np.where(degenerate, xb, xb2),
        np.where(degenerate, yb, yb2),
        degenerate,
    )


def ds_collide_arrays(xd, yd, xs, ys, saving: SavingPolicy, alpha_w, beta_w):
    """Vectorized dealer-speculator collisions; see dd_collide_arrays."""
    lx, ly = saving.lambda_x, saving.lambda_y
    sum_x = xd + lx * xs
    sum_y = yd + ly * ys
    degenerate = (sum_x <= 0.0) | (sum_y <= 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = sum_x / sum_y
        inv = sum_y / sum_x
        xd2 = xd + beta_w * (ratio * yd - xd)
        yd2 = yd + alpha_w * (inv * xd - yd)
        xs2 = xs + beta_w * (ratio * (ly * ys) - lx * xs)
        ys2 = ys + alpha_w * (inv * (lx * xs) - ly * ys)
    return (
        np.where(degenerate, xd, xd2),
        np.where(degenerate, yd, yd2),
        np.where(degenerate, xs, xs2),
        np.where(degenerate, ys, ys2),
        degenerate,
    )


@dataclass(frozen=True)
class NonlinearSimConfig:
    """Parameters of one two-phase binary-collision run."""

    prefs: Preferences
    saving: SavingPolicy
    coeff_model: CoefficientModel
    sigma: float = 1.0
    mu: float = 1.0
    dt: float = 0.01
    t_end: float = 50.0
    phase1_end: float = 10.0
    seed: int = 0
    snapshot_every: int | None = 100
    snapshot_bins: int = 50

    def __post_init__(self):
        problems = []
        if self.sigma <= 0.0:
            problems.append(f"sigma must be positive, got {self.sigma}")
        if self.mu <= 0.0:
            problems.append(f"mu must be positive, got {self.mu}")
        if self.dt <= 0.0:
            problems.append(f"dt must be positive, got {self.dt}")
        if self.t_end < 0.0:
            problems.append(f"t_end must be nonnegative, got {self.t_end}")
        if self.phase1_end < 0.0:
            problems.append(f"phase1_end must be nonnegative, got {self.phase1_end}")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            problems.append(f"snapshot_every must be at least 1, got {self.snapshot_every}")
        if self.snapshot_bins < 1:
            problems.append(f"snapshot_bins must be at least 1, got {self.snapshot_bins}")
        if problems:
            raise ConfigurationError(problems)


@dataclass(frozen=True)
class NonlinearRunResult:
    rows: list[ObservableRow]
    dealers: Population
    speculators: Population
    price_error_count: int
    skipped_collisions: int
    snapshots: list[HistogramSnapshot] = field(default_factory=list)


def nonlinear_step(
    dealers: Population,
    speculators: Population,
    config: NonlinearSimConfig,
    rng: np.random.Generator,
    speculators_active: bool,
) -> tuple[Population, Population, int]:
    """Advance one step; returns new populations and the skip count."""
    dx = dealers.x.copy()
    dy = dealers.y.copy()
    sx = speculators.x.copy()
    sy = speculators.y.copy()
    skipped = _collide_in_place(dx, dy, sx, sy, config, rng, speculators_active)
    return (
        Population(dealers.label, dx, dy),
        Population(speculators.label, sx, sy),
        skipped,
    )


def _collide_in_place(dx, dy, sx, sy, config, rng, speculators_active) -> int:
    """Run one step's collisions directly on the holding arrays."""
    n_a = dx.size
    n_b = sx.size
    if config.sigma * config.dt > 1.0:
        raise ConfigurationError(
            f"sigma*dt must not exceed 1 so at most N_A/2 pairs trade per step, "
            f"got {config.sigma * config.dt}"
        )
    if config.mu * config.dt > n_a:
        raise ConfigurationError(
            f"mu*dt must not exceed N_A, got {config.mu * config.dt}"
        )
    uniform_coeffs = config.coeff_model.mode == "uniform"
    prefs = config.prefs
    skipped = 0

    k_dd = stochastic_round(config.sigma * config.dt * n_a / 2.0, rng)
    if k_dd and n_a < 2:
        skipped += k_dd  # no pair exists
        k_dd = 0
    if k_dd:
        first = rng.integers(0, n_a, k_dd)
        offset = rng.integers(0, n_a - 1, k_dd)
        second = offset + (offset >= first)  # distinct partner, uniform over the rest
        if uniform_coeffs:
            a_w, b_w = sample_coefficients_array(config.coeff_model, prefs, rng, k_dd)
        for c in range(k_dd):
            i = first[c]
            j = second[c]
            xa = dx[i]
            ya = dy[i]
            xb = dx[j]
            yb = dy[j]
            sum_x = xa + xb
            sum_y = ya + yb
            if sum_x <= 0.0 or sum_y <= 0.0:
                skipped += 1
                continue
            ratio = sum_x / sum_y
            inv = sum_y / sum_x
            b = b_w[c] if uniform_coeffs else prefs.beta
            a = a_w[c] if uniform_coeffs else prefs.alpha
            dx[i] = xa + b * (ratio * ya - xa)
            dy[i] = ya + a * (inv * xa - ya)
            dx[j] = xb + b * (ratio * yb - xb)
            dy[j] = yb + a * (inv * xb - yb)

    if speculators_active:
        lx = config.saving.lambda_x
        ly = config.saving.lambda_y
        k_ds = stochastic_round(config.mu * config.dt * n_b, rng)
        if k_ds:
            d_idx = rng.integers(0, n_a, k_ds)
            s_idx = rng.integers(0, n_b, k_ds)
            if uniform_coeffs:
                a_w, b_w = sample_coefficients_array(config.coeff_model, prefs, rng, k_ds)
            for c in range(k_ds):
                i = d_idx[c]
                j = s_idx[c]
                xd = dx[i]
                yd = dy[i]
                xs = sx[j]
                ys = sy[j]
                sum_x = xd + lx * xs
                sum_y = yd + ly * ys
                if sum_x <= 0.0 or sum_y <= 0.0:
                    skipped += 1
                    continue
                ratio = sum_x / sum_y
                inv = sum_y / sum_x
                b = b_w[c] if uniform_coeffs else prefs.beta
                a = a_w[c] if uniform_coeffs else prefs.alpha
                dx[i] = xd + b * (ratio * yd - xd)
                dy[i] = yd + a * (inv * xd - yd)
                sx[j] = xs + b * (ratio * (ly * ys) - lx * xs)
                sy[j] = ys + a * (inv * (lx * xs) - ly * ys)
    return skipped


def two_phase_run(
    config: NonlinearSimConfig,
    dealers: Population,
    speculators: Population,
    rng: np.random.Generator | None = None,
) -> NonlinearRunResult:
    """Dealers-only warm-up, then the full market; one row per step.

    Rows at t < phase1_end carry the dealer-only price; from phase1_end on
    the price weighs the speculator means by the saving fractions, so the
    recorded price jumps at the entry instant before mixed trades begin.
    Without an injected generator the run seeds its own counter-based
    stream from config.seed.
    """
    if rng is None:
        rng = np.random.Generator(np.random.Philox(config.seed))
    n_steps = int(round(config.t_end / config.dt))
    n_entry = min(int(round(config.phase1_end / config.dt)), n_steps)

    dx = dealers.x.copy()
    dy = dealers.y.copy()
    sx = speculators.x.copy()
    sy = speculators.y.copy()

    recorder = SeriesRecorder()
    snapshots: list[HistogramSnapshot] = []

    def sample(step: int) -> None:
        t = step * config.dt
        recorder.add(
            row_from_populations(
                dx, dy, sx, sy, config.prefs, config.saving, t,
                speculators_active=step >= n_entry,
            )
        )
        every = config.snapshot_every
        if every is not None and (step % every == 0 or step == n_steps):
            for label, gx, gy in (("dealers", dx, dy), ("speculators", sx, sy)):
                snapshots.append(
                    snapshot_histogram(gx, gy, t, label, bins=config.snapshot_bins)
                )

    skipped = 0
    sample(0)
    for k in range(n_steps):
        skipped += _collide_in_place(dx, dy, sx, sy, config, rng, k >= n_entry)
        sample(k + 1)

    return NonlinearRunResult(
        rows=recorder.rows,
        dealers=Population(dealers.label, dx, dy),
        speculators=Population(speculators.label, sx, sy),
        price_error_count=recorder.price_error_count,
        skipped_collisions=skipped,
        snapshots=snapshots,
    )
