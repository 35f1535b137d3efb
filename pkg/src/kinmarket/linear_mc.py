"""Monte Carlo solver for the linear mean-field market model.

Every agent trades against the frozen population means rather than against
a sampled partner: at each step an agent is selected with probability
sigma*dt and, if selected, replaces its holdings with the outcome of one
trade at the clearing price implied by the start-of-step empirical means.
With deterministic coefficients and sigma*dt = 1 the empirical means follow
the forward-Euler discretization of the mean ODE system exactly, which is
the main correctness oracle for this solver.

Randomness is consumed in a fixed order per step: dealer selection mask,
dealer coefficient arrays (uniform mode only), speculator selection mask,
speculator coefficient arrays. Coefficients are drawn for every agent, used
only where selected, so the stream layout never depends on outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    CoefficientModel,
    MeanState,
    Preferences,
    SavingPolicy,
    sample_coefficients_array,
)
from .errors import ConfigurationError, SingularMarketError
from .observables import ObservableRow, SeriesRecorder, row_from_populations
from .population import Population, empirical_means


@dataclass(frozen=True)
class LinearSimConfig:
    """Parameters of one linear Monte Carlo run."""

    prefs: Preferences
    saving: SavingPolicy
    coeff_model: CoefficientModel
    sigma: float = 1.0
    dt: float = 0.01
    t_end: float = 10.0
    seed: int = 0

    def __post_init__(self):
        problems = []
        if self.sigma <= 0.0:
            problems.append(f"sigma must be positive, got {self.sigma}")
        if self.dt <= 0.0:
            problems.append(f"dt must be positive, got {self.dt}")
        if self.t_end < 0.0:
            problems.append(f"t_end must be nonnegative, got {self.t_end}")
        if self.sigma * self.dt > 1.0:
            problems.append(
                f"sigma*dt is an update probability and must not exceed 1, "
                f"got {self.sigma * self.dt}"
            )
        if problems:
            raise ConfigurationError(problems)


@dataclass(frozen=True)
class LinearRunResult:
    rows: list[ObservableRow]
    dealers: Population
    speculators: Population
    price_error_count: int


def linear_step(
    dealers: Population,
    speculators: Population,
    field: MeanState,
    prefs: Preferences,
    saving: SavingPolicy,
    coeff_model: CoefficientModel,
    update_probability: float,
    rng: np.random.Generator,
) -> tuple[Population, Population]:
    """Advance both populations one step against the given mean field."""
    lx, ly = saving.lambda_x, saving.lambda_y
    den_x = field.Mx + lx * field.mx
    den_y = field.My + ly * field.my
    if den_x <= 0.0 or den_y <= 0.0:
        raise SingularMarketError(
            f"mean field exposes no goods: ({den_x}, {den_y})"
        )
    ratio = den_x / den_y
    inv = den_y / den_x

    x, y = dealers.x, dealers.y
    chosen = rng.random(dealers.n) < update_probability
    a_w, b_w = sample_coefficients_array(coeff_model, prefs, rng, dealers.n)
    new_dealers = Population(
        dealers.label,
        np.where(chosen, x + b_w * (ratio * y - x), x),
        np.where(chosen, y + a_w * (inv * x - y), y),
    )

    x, y = speculators.x, speculators.y
    chosen = rng.random(speculators.n) < update_probability
    a_w, b_w = sample_coefficients_array(coeff_model, prefs, rng, speculators.n)
    new_speculators = Population(
        speculators.label,
        np.where(chosen, x + b_w * (ratio * (ly * y) - lx * x), x),
        np.where(chosen, y + a_w * (inv * (lx * x) - ly * y), y),
    )
    return new_dealers, new_speculators


def run_linear(
    config: LinearSimConfig,
    dealers: Population,
    speculators: Population,
    rng: np.random.Generator | None = None,
) -> LinearRunResult:
    """Run the linear model on a fixed grid, recording one row per sample.

    Without an injected generator the run seeds its own counter-based
    stream from config.seed.
    """
    if rng is None:
        rng = np.random.Generator(np.random.Philox(config.seed))
    n_steps = int(round(config.t_end / config.dt))
    p_update = config.sigma * config.dt
    recorder = SeriesRecorder()
    recorder.add(
        row_from_populations(
            dealers.x, dealers.y, speculators.x, speculators.y,
            config.prefs, config.saving, 0.0,
        )
    )
    for k in range(n_steps):
        field = empirical_means(dealers, speculators)
        dealers, speculators = linear_step(
            dealers, speculators, field,
            config.prefs, config.saving, config.coeff_model, p_update, rng,
        )
        recorder.add(
            row_from_populations(
                dealers.x, dealers.y, speculators.x, speculators.y,
                config.prefs, config.saving, (k + 1) * config.dt,
            )
        )
    return LinearRunResult(
        rows=recorder.rows,
        dealers=dealers,
        speculators=speculators,
        price_error_count=recorder.price_error_count,
    )
