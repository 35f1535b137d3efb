"""Domain types and single-trade primitives for the two-good exchange market.

Two trader populations share a market for goods X and Y. Dealers put their
whole holding on the table at every trade; speculators only expose the
fractions lambda_x and lambda_y of theirs and keep the rest aside. Every
trader ranks bundles with the same Cobb-Douglas utility, so after a trade
each participant walks away with the utility-maximizing split of the wealth
they exposed, valued at the price that clears the exposed goods.

All scalar state is held in small frozen dataclasses; the Monte Carlo
solvers store populations as numpy arrays and call the vectorized kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, SingularMarketError

# Tolerance for the alpha + beta = 1 budget identity.
_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Preferences:
    """Cobb-Douglas exponents of the shared utility, alpha + beta = 1."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0 and 0.0 < self.beta < 1.0):
            raise DomainError(
                f"preference exponents must lie in (0, 1), got alpha={self.alpha}, beta={self.beta}"
            )
        if abs(self.alpha + self.beta - 1.0) > _SUM_TOL:
            raise DomainError(
                f"alpha + beta must equal 1 within {_SUM_TOL}, got {self.alpha + self.beta}"
            )

    @classmethod
    def from_alpha(cls, alpha: float) -> "Preferences":
        return cls(alpha, 1.0 - alpha)


@dataclass(frozen=True)
class SavingPolicy:
    """Fractions of each good a speculator exposes per trade, both in [0, 1]."""

    lambda_x: float
    lambda_y: float

    def __post_init__(self):
        for name, value in (("lambda_x", self.lambda_x), ("lambda_y", self.lambda_y)):
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value}")


# Dealers behave like speculators that expose everything.
DEALER_SAVING = SavingPolicy(1.0, 1.0)


@dataclass(frozen=True)
class GoodsPair:
    """One agent's holdings of the two goods; never negative."""

    x: float
    y: float

    def __post_init__(self):
        if self.x < 0.0 or self.y < 0.0:
            raise DomainError(f"holdings must be nonnegative, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class MeanState:
    """Population-mean holdings: dealers (Mx, My), speculators (mx, my)."""

    Mx: float
    My: float
    mx: float
    my: float

    def __post_init__(self):
        for name in ("Mx", "My", "mx", "my"):
            if getattr(self, name) < 0.0:
                raise DomainError(f"{name} must be nonnegative, got {getattr(self, name)}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.Mx, self.My, self.mx, self.my)


@dataclass(frozen=True)
class CoefficientModel:
    """Law of the per-trade exchange coefficients.

    "deterministic" always returns (alpha, beta). "uniform" draws them
    independently from alpha +- half_width_alpha and beta +- half_width_beta;
    both intervals must stay inside [0, 1] or the trade rules could produce
    negative holdings.
    """

    mode: str = "deterministic"
    half_width_alpha: float = 0.0
    half_width_beta: float = 0.0

    def __post_init__(self):
        if self.mode not in ("deterministic", "uniform"):
            raise ConfigurationError(
                f"coeff_model.mode must be 'deterministic' or 'uniform', got {self.mode!r}"
            )
        if self.half_width_alpha < 0.0 or self.half_width_beta < 0.0:
            raise ConfigurationError("coefficient half-widths must be nonnegative")

    def validate_for(self, prefs: Preferences) -> None:
        """Reject draws that could leave [0, 1] for these preferences."""
        if self.mode == "deterministic":
            return
        problems = []
        if prefs.alpha - self.half_width_alpha < 0.0 or prefs.alpha + self.half_width_alpha > 1.0:
            problems.append(
                f"alpha interval [{prefs.alpha - self.half_width_alpha}, "
                f"{prefs.alpha + self.half_width_alpha}] leaves [0, 1]"
            )
        if prefs.beta - self.half_width_beta < 0.0 or prefs.beta + self.half_width_beta > 1.0:
            problems.append(
                f"beta interval [{prefs.beta - self.half_width_beta}, "
                f"{prefs.beta + self.half_width_beta}] leaves [0, 1]"
            )
        if problems:
            raise ConfigurationError(problems)


def cobb_douglas(x: float, w: float, prefs: Preferences) -> float:
    """Utility x**alpha * (w - x)**beta of splitting wealth w at allocation x."""
    if w < 0.0:
        raise DomainError(f"wealth must be nonnegative, got {w}")
    if not 0.0 <= x <= w:
        raise DomainError(f"allocation x={x} must lie in [0, w={w}]")
    return x**prefs.alpha * (w - x) ** prefs.beta


def optimal_allocation(w: float, price: float, prefs: Preferences) -> tuple[float, float]:
    """Utility-maximizing bundle (x, y) affordable with wealth w at this price.

    The maximizer of the Cobb-Douglas utility over the budget line spends the
    fraction alpha of wealth on good X and beta on good Y.
    """
    if w < 0.0:
        raise DomainError(f"wealth must be nonnegative, got {w}")
    if price <= 0.0:
        raise DomainError(f"price must be positive, got {price}")
    return prefs.alpha * w, prefs.beta * w / price


def wealth(pair: GoodsPair, price: float) -> float:
    """Value of a holding in units of good X at the given relative price."""
    if price <= 0.0:
        raise DomainError(f"price must be positive, got {price}")
    return pair.x + price * pair.y


def exposed_goods(means: MeanState, saving: SavingPolicy) -> tuple[float, float]:
    """Per-capita goods actually on the market: dealers fully, speculators scaled."""
    return (
        means.Mx + saving.lambda_x * means.mx,
        means.My + saving.lambda_y * means.my,
    )


def market_price(means: MeanState, saving: SavingPolicy, prefs: Preferences) -> float:
    """Clearing price of good Y in units of X, from the exposed mean goods."""
    den_x, den_y = exposed_goods(means, saving)
    if den_x <= 0.0:
        raise SingularMarketError(f"no good X on the market: Mx + lambda_x*mx = {den_x}")
    if den_y <= 0.0:
        raise SingularMarketError(f"no good Y on the market: My + lambda_y*my = {den_y}")
    return (prefs.beta / prefs.alpha) * (den_x / den_y)


def dealer_only_price(means: MeanState, prefs: Preferences) -> float:
    """Clearing price while speculators are out of the market entirely."""
    if means.Mx <= 0.0:
        raise SingularMarketError(f"no good X on the market: Mx = {means.Mx}")
    if means.My <= 0.0:
        raise SingularMarketError(f"no good Y on the market: My = {means.My}")
    return (prefs.beta / prefs.alpha) * (means.Mx / means.My)


def rho_transform(means: MeanState, saving: SavingPolicy) -> tuple[float, float]:
    """Dealer share of each exposed good, (rho_x, rho_y)."""
    den_x, den_y = exposed_goods(means, saving)
    if den_x <= 0.0 or den_y <= 0.0:
        raise SingularMarketError(
            f"exposed goods must be positive, got ({den_x}, {den_y})"
        )
    return means.Mx / den_x, means.My / den_y


def mean_wealths(means: MeanState, saving: SavingPolicy, prefs: Preferences) -> tuple[float, float]:
    """Mean wealth of dealers and of speculators at the current clearing price."""
    price = market_price(means, saving, prefs)
    return means.Mx + price * means.My, means.mx + price * means.my


def sample_coefficients(
    model: CoefficientModel, prefs: Preferences, rng: np.random.Generator
) -> tuple[float, float]:
    """One independent draw of the exchange coefficients (alpha_w, beta_w)."""
    if model.mode == "deterministic":
        return prefs.alpha, prefs.beta
    model.validate_for(prefs)
    a = rng.uniform(prefs.alpha - model.half_width_alpha, prefs.alpha + model.half_width_alpha)
    b = rng.uniform(prefs.beta - model.half_width_beta, prefs.beta + model.half_width_beta)
    return a, b


def sample_coefficients_array(
    model: CoefficientModel, prefs: Preferences, rng: np.random.Generator, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized coefficient draws; alpha array first, then beta array."""
    if model.mode == "deterministic":
        return np.full(n, prefs.alpha), np.full(n, prefs.beta)
    model.validate_for(prefs)
    a = rng.uniform(prefs.alpha - model.half_width_alpha, prefs.alpha + model.half_width_alpha, n)
    b = rng.uniform(prefs.beta - model.half_width_beta, prefs.beta + model.half_width_beta, n)
    return a, b
