"""Exception hierarchy shared by all kinmarket modules.

Exit-code mapping used by the CLI: configuration problems -> 2,
numerical failures -> 3, output/filesystem failures -> 4.
"""

from __future__ import annotations


class MarketError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MarketError):
    """An argument lies outside the mathematical domain of an operation."""


class SingularMarketError(MarketError):
    """An effective goods denominator vanished, so no price exists."""


class NotConservedError(MarketError):
    """The closed-form conserved quantity does not exist for these savings."""


class UnsupportedSavingError(MarketError):
    """A closed-form result is unavailable at this saving policy."""


class IntegrationError(MarketError):
    """The ODE integrator left the admissible region."""


class DegenerateCollisionError(MarketError):
    """Both partners hold zero of one good; the collision is a no-op."""


class ConfigurationError(MarketError):
    """One or more scenario-configuration violations.

    Carries the full list so a caller can report every problem at once.
    """

    def __init__(self, violations: list[str] | str):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = violations
        super().__init__("; ".join(violations))


class OutputError(MarketError):
    """An output file could not be written or read; message carries the path."""
