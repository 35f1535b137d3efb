"""Agent populations stored as parallel numpy holding arrays."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MeanState
from .errors import DomainError


@dataclass(frozen=True)
class Population:
    """A trader class: one label, one holdings array per good."""

    label: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 1 or y.ndim != 1 or x.size != y.size:
            raise DomainError("holdings must be two 1-d arrays of equal length")
        if x.size == 0:
            raise DomainError("population must hold at least one agent")
        if np.min(x) < 0.0 or np.min(y) < 0.0:
            raise DomainError(f"negative holdings in population {self.label!r}")

    @property
    def n(self) -> int:
        return int(self.x.size)

    def means(self) -> tuple[float, float]:
        return float(np.mean(self.x)), float(np.mean(self.y))

    @classmethod
    def degenerate(cls, label: str, n: int, x0: float, y0: float) -> "Population":
        """Every agent starts at exactly the same holdings."""
        return cls(label, np.full(n, float(x0)), np.full(n, float(y0)))

    @classmethod
    def uniform_spread(
        cls,
        label: str,
        n: int,
        x0: float,
        y0: float,
        width: float,
        rng: np.random.Generator,
    ) -> "Population":
        """Holdings drawn from v*(1 +- width) per good; width in [0, 1].

        Consumes the x array first, then the y array, so population setup
        advances the stream the same way for any width.
        """
        if not 0.0 <= width <= 1.0:
            raise DomainError(f"spread width must lie in [0, 1], got {width}")
        x = rng.uniform(x0 * (1.0 - width), x0 * (1.0 + width), n)
        y = rng.uniform(y0 * (1.0 - width), y0 * (1.0 + width), n)
        return cls(label, x, y)


def empirical_means(dealers: Population, speculators: Population) -> MeanState:
    """Per-capita mean holdings of both classes, as one MeanState."""
    Mx, My = dealers.means()
    mx, my = speculators.means()
    return MeanState(Mx=Mx, My=My, mx=mx, my=my)
