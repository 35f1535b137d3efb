"""Kinetic dealer/speculator goods-exchange market simulator.

Dealers trade their full holdings of two goods; speculators expose only
saved fractions of theirs. The package provides mean-field analytics
(ODE integration, conserved quantity, equilibrium and limit price), a
linear mean-field Monte Carlo, a nonlinear binary-collision Monte Carlo
with the two-phase market-entry experiment, stable CSV/JSONL observables,
and a scenario CLI.
"""

from .config import PRESET_IDS, ScenarioConfig, figure_preset, load_config, parse_config
from .core import (
    DEALER_SAVING,
    CoefficientModel,
    GoodsPair,
    MeanState,
    Preferences,
    SavingPolicy,
    cobb_douglas,
    dealer_only_price,
    exposed_goods,
    market_price,
    mean_wealths,
    optimal_allocation,
    rho_transform,
    sample_coefficients,
    sample_coefficients_array,
    wealth,
)
from .errors import (
    ConfigurationError,
    DegenerateCollisionError,
    DomainError,
    IntegrationError,
    MarketError,
    NotConservedError,
    OutputError,
    SingularMarketError,
    UnsupportedSavingError,
)
from .linear_mc import LinearRunResult, LinearSimConfig, linear_step, run_linear
from .meanfield import (
    EquilibriumResult,
    MeanTrajectory,
    conserved_quantity,
    equilibrium_rho,
    explicit_solution,
    integrate_means,
    integrate_shares,
    limit_means,
    limit_price,
    mean_rhs,
)
from .nonlinear_mc import (
    NonlinearRunResult,
    NonlinearSimConfig,
    dd_collision,
    ds_collision,
    nonlinear_step,
    stochastic_round,
    two_phase_run,
)
from .observables import (
    CSV_FIELDS,
    CSV_HEADER,
    HistogramSnapshot,
    ObservableRow,
    read_series,
    read_snapshots,
    snapshot_histogram,
    write_series,
    write_snapshots,
)
from .population import Population, empirical_means
from .runner import RunSummary, run_scenario

__version__ = "0.1.0"
