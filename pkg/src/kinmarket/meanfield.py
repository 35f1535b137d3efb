"""Mean-field dynamics of the dealer/speculator market.

The per-capita mean holdings (Mx, My, mx, my) close into a first-order ODE
system once trades are averaged: each population's means relax toward the
allocation that is optimal at the instantaneous clearing price. Writing
R = (Mx + lambda_x*mx)/(My + lambda_y*my) for the exposed-goods ratio,

    dMx/dt = beta*(R*My - Mx)            dmx/dt = beta*(R*lambda_y*my - lambda_x*mx)
    dMy/dt = alpha*(Mx/R - My)           dmy/dt = alpha*(lambda_x*mx/R - lambda_y*my)

Both per-capita totals Ix = Mx + mx and Iy = My + my are invariants, and for
positive saving fractions a logarithmic quantity built from the speculator
means is conserved as well, which pins the unique market equilibrium reached
as t -> infinity. This module integrates the system (classic fixed-step RK4),
evaluates the conserved quantity, solves for the equilibrium dealer share by
bisection, and evaluates the closed-form solution of the hoarding case
lambda_x = 0, lambda_y = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import MeanState, Preferences, SavingPolicy, market_price, rho_transform
from .errors import (
    DomainError,
    IntegrationError,
    NotConservedError,
    SingularMarketError,
    UnsupportedSavingError,
)

# Saving fractions this close to 1 use the analytic lambda -> 1 limit.
_LIMIT_TOL = 1e-8

# Any mean this far below zero aborts the integration.
_NEGATIVE_TOL = -1e-12

# Relative drift of the linear invariants tolerated inside a trajectory.
_CONS_TOL = 1e-9


@dataclass(frozen=True)
class MeanTrajectory:
    """Sampled solution of the mean system on a uniform time grid.

    states has one row per sample in MeanState field order (Mx, My, mx, my);
    prices carries the clearing price at each sample.
    """

    times: np.ndarray
    states: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        if self.states.shape != (len(self.times), 4) or self.prices.shape != (len(self.times),):
            raise DomainError("trajectory arrays must share one sample count")
        if len(self.times) == 0:
            raise DomainError("trajectory must hold at least one sample")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise DomainError("trajectory times must be strictly increasing")
        total_x = self.states[:, 0] + self.states[:, 2]
        total_y = self.states[:, 1] + self.states[:, 3]
        for name, total in (("Ix", total_x), ("Iy", total_y)):
            scale = abs(total[0])
            if scale > 0 and np.max(np.abs(total - total[0])) > _CONS_TOL * scale:
                raise IntegrationError(f"per-capita total {name} drifted beyond tolerance")

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> MeanState:
        return MeanState(*self.states[i])

    @property
    def final_state(self) -> MeanState:
        return self.state(len(self) - 1)

    @property
    def final_price(self) -> float:
        return float(self.prices[-1])


@dataclass(frozen=True)
class EquilibriumResult:
    """Output of the equilibrium solver: common dealer share and its market."""

    rho: float
    limit_price: float
    limit_means: MeanState
    iterations: int


def mean_rhs(
    means: MeanState, prefs: Preferences, saving: SavingPolicy
) -> tuple[float, float, float, float]:
    """Time derivatives (dMx, dMy, dmx, dmy) of the mean system."""
    d = _rhs_scalar(
        means.Mx, means.My, means.mx, means.my,
        prefs.alpha, prefs.beta, saving.lambda_x, saving.lambda_y,
    )
    return d


def _rhs_scalar(Mx, My, mx, my, alpha, beta, lx, ly):
    den_x = Mx + lx * mx
    den_y = My + ly * my
    if den_x <= 0.0 or den_y <= 0.0:
        raise SingularMarketError(
            f"exposed goods must stay positive, got ({den_x}, {den_y})"
        )
    ratio = den_x / den_y
    inv = den_y / den_x
    return (
        beta * (ratio * My - Mx),
        alpha * (inv * Mx - My),
        beta * (ratio * ly * my - lx * mx),
        alpha * (inv * lx * mx - ly * my),
    )


def integrate_means(
    initial: MeanState,
    prefs: Preferences,
    saving: SavingPolicy,
    t_end: float,
    dt: float = 1e-3,
) -> MeanTrajectory:
    """Integrate the mean system with classic RK4 on a fixed grid.

    Samples every accepted step, including t = 0. Raises on singular exposed
    goods, and raises IntegrationError if any mean dips below -1e-12.
    """
    if dt <= 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    if t_end < 0.0:
        raise DomainError(f"t_end must be nonnegative, got {t_end}")
    n = int(round(t_end / dt))
    alpha, beta = prefs.alpha, prefs.beta
    lx, ly = saving.lambda_x, saving.lambda_y

    states = np.empty((n + 1, 4))
    a, b, c, d = initial.Mx, initial.My, initial.mx, initial.my
    states[0] = (a, b, c, d)
    half = 0.5 * dt
    sixth = dt / 6.0
    for k in range(n):
        k1 = _rhs_scalar(a, b, c, d, alpha, beta, lx, ly)
        k2 = _rhs_scalar(
            a + half * k1[0], b + half * k1[1], c + half * k1[2], d + half * k1[3],
            alpha, beta, lx, ly,
        )
        k3 = _rhs_scalar(
            a + half * k2[0], b + half * k2[1], c + half * k2[2], d + half * k2[3],
            alpha, beta, lx, ly,
        )
        k4 = _rhs_scalar(
            a + dt * k3[0], b + dt * k3[1], c + dt * k3[2], d + dt * k3[3],
            alpha, beta, lx, ly,
        )
        a += sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
        b += sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
        c += sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
        d += sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3])
        if min(a, b, c, d) < _NEGATIVE_TOL:
            raise IntegrationError(
                f"mean state left the positive region at t={(k + 1) * dt}: "
                f"({a}, {b}, {c}, {d})"
            )
        states[k + 1] = (a, b, c, d)

    times = np.arange(n + 1) * dt
    den_x = states[:, 0] + lx * states[:, 2]
    den_y = states[:, 1] + ly * states[:, 3]
    prices = (beta / alpha) * den_x / den_y
    return MeanTrajectory(times=times, states=states, prices=prices)


def conserved_quantity(means: MeanState, prefs: Preferences, saving: SavingPolicy) -> float:
    """Logarithmic invariant of the mean flow, defined for positive savings.

    Uses the form sum of log(I - (1 - lambda)*m) / (coeff * (1 - lambda)) per
    good; the argument equals the exposed good M + lambda*m, so it stays
    positive on any valid state. At lambda -> 1 each term degenerates to a
    divergent constant plus -m/(coeff*I); the constant is dropped, so values
    are only comparable within one saving policy. Requires lambda_x > 0 and
    lambda_y > 0: at zero saving the quantity does not exist.
    """
    lx, ly = saving.lambda_x, saving.lambda_y
    if lx == 0.0 or ly == 0.0:
        raise NotConservedError(
            "conserved quantity requires strictly positive saving fractions"
        )
    total_x = means.Mx + means.mx
    total_y = means.My + means.my
    return _log_term(means.mx, total_x, prefs.beta, lx) + _log_term(
        means.my, total_y, prefs.alpha, ly
    )


def _log_term(m, total, coeff, lam):
    if abs(1.0 - lam) < _LIMIT_TOL:
        if total <= 0.0:
            raise SingularMarketError(f"per-capita total must be positive, got {total}")
        return -m / (coeff * total)
    arg = total - (1.0 - lam) * m
    if arg <= 0.0:
        raise SingularMarketError(f"exposed good must be positive, got {arg}")
    return math.log(arg) / (coeff * (1.0 - lam))


def _share_potential(u: float, v: float, prefs: Preferences, saving: SavingPolicy) -> float:
    """Conserved quantity expressed through the dealer shares (rho_x, rho_y).

    Strictly decreasing in each argument on [0, 1], which makes the
    equilibrium equation solvable by bisection.
    """
    return _share_term(u, prefs.beta, saving.lambda_x) + _share_term(
        v, prefs.alpha, saving.lambda_y
    )


def _share_term(u, coeff, lam):
    if abs(1.0 - lam) < _LIMIT_TOL:
        return -u / coeff
    return math.log1p(-(1.0 - lam) * u) / (coeff * (1.0 - lam))


def equilibrium_rho(
    initial: MeanState,
    prefs: Preferences,
    saving: SavingPolicy,
    tol: float = 1e-12,
) -> EquilibriumResult:
    """Solve for the common equilibrium dealer share by bisection.

    At equilibrium both goods have the same dealer share rho, and rho is
    pinned by matching the conserved quantity of the initial state. The root
    is bracketed by the initial shares, and the interval is halved until it
    is narrower than tol.
    """
    lx, ly = saving.lambda_x, saving.lambda_y
    if lx == 0.0 or ly == 0.0:
        raise UnsupportedSavingError(
            "equilibrium share needs positive saving fractions; "
            "integrate the mean system to steady state instead"
        )
    rho_x, rho_y = rho_transform(initial, saving)
    target = _share_potential(rho_x, rho_y, prefs, saving)
    lo, hi = min(rho_x, rho_y), max(rho_x, rho_y)
    iterations = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _share_potential(mid, mid, prefs, saving) >= target:
            lo = mid
        else:
            hi = mid
        iterations += 1
    rho = 0.5 * (lo + hi)
    means_inf = limit_means(initial, prefs, saving, rho=rho)
    price_inf = _limit_price_from_rho(initial, prefs, saving, rho)
    return EquilibriumResult(
        rho=rho, limit_price=price_inf, limit_means=means_inf, iterations=iterations
    )


def limit_means(
    initial: MeanState,
    prefs: Preferences,
    saving: SavingPolicy,
    rho: float | None = None,
) -> MeanState:
    """Equilibrium mean state reached from the given initial means."""
    if rho is None:
        rho = equilibrium_rho(initial, prefs, saving).rho
    lx, ly = saving.lambda_x, saving.lambda_y
    total_x = initial.Mx + initial.mx
    total_y = initial.My + initial.my
    Mx = rho * lx * total_x / (1.0 - (1.0 - lx) * rho)
    My = rho * ly * total_y / (1.0 - (1.0 - ly) * rho)
    return MeanState(Mx=Mx, My=My, mx=total_x - Mx, my=total_y - My)


def limit_price(initial: MeanState, prefs: Preferences, saving: SavingPolicy) -> float:
    """Asymptotic clearing price reached from the given initial means."""
    rho = equilibrium_rho(initial, prefs, saving).rho
    return _limit_price_from_rho(initial, prefs, saving, rho)


def _limit_price_from_rho(initial, prefs, saving, rho):
    lx, ly = saving.lambda_x, saving.lambda_y
    total_x = initial.Mx + initial.mx
    total_y = initial.My + initial.my
    base = (prefs.beta * lx * total_x) / (prefs.alpha * ly * total_y)
    return base * (1.0 - (1.0 - ly) * rho) / (1.0 - (1.0 - lx) * rho)


def integrate_shares(
    rho_x0: float,
    rho_y0: float,
    prefs: Preferences,
    saving: SavingPolicy,
    t_end: float,
    dt: float = 1e-3,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """RK4 on the closed two-equation system for the dealer shares.

    Independent of integrate_means; used to cross-check that the shares of
    the full solution obey their reduced dynamics.
    """
    if dt <= 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    n = int(round(t_end / dt))
    alpha, beta = prefs.alpha, prefs.beta
    lx, ly = saving.lambda_x, saving.lambda_y

    def rhs(u, v):
        return (
            beta * (1.0 - (1.0 - lx) * u) * (v - u),
            alpha * (1.0 - (1.0 - ly) * v) * (u - v),
        )

    out = np.empty((n + 1, 2))
    u, v = rho_x0, rho_y0
    out[0] = (u, v)
    half = 0.5 * dt
    sixth = dt / 6.0
    for k in range(n):
        k1 = rhs(u, v)
        k2 = rhs(u + half * k1[0], v + half * k1[1])
        k3 = rhs(u + half * k2[0], v + half * k2[1])
        k4 = rhs(u + dt * k3[0], v + dt * k3[1])
        u += sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
        v += sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
        out[k + 1] = (u, v)
    times = np.arange(n + 1) * dt
    return times, out[:, 0], out[:, 1]


def explicit_solution(
    initial: MeanState, prefs: Preferences, t: float
) -> tuple[MeanState, float]:
    """Closed-form mean state and price for the hoarding policy (0, 1).

    Speculators expose none of good X and all of good Y, so their Y decays
    exponentially while they accumulate X; the price decreases strictly.
    """
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got {t}")
    total_x = initial.Mx + initial.mx
    total_y = initial.My + initial.my
    if total_y <= 0.0 or initial.Mx <= 0.0:
        raise SingularMarketError(
            "hoarding solution needs positive dealer X and positive total Y"
        )
    alpha, beta = prefs.alpha, prefs.beta
    decay = math.exp(-alpha * t)
    my_t = initial.my * decay
    Mx_t = initial.Mx * math.exp(-(beta / alpha) * (initial.my / total_y) * (1.0 - decay))
    state = MeanState(Mx=Mx_t, My=total_y - my_t, mx=total_x - Mx_t, my=my_t)
    price = (beta / alpha) * Mx_t / total_y
    return state, price
