"""Exception hierarchy.

Errors are grouped into families so the command line can map each family
to a stable exit code: configuration/validation problems, resource
budgets, and numerical failures.
"""

from __future__ import annotations


class QgsError(Exception):
    """Base class for all package errors."""


# ---------------------------------------------------------------- config
class ConfigError(QgsError):
    """Invalid configuration or model input."""


class MissingField(ConfigError):
    pass


class UnknownUnit(ConfigError):
    pass


class NonPositiveFrequency(ConfigError):
    pass


class NonHermitianCoupling(ConfigError):
    """A coupling or energy entry is not a finite real number."""


class ChannelNotInBasis(ConfigError):
    """A final-state channel exceeds the Fock truncation of the basis."""


# ---------------------------------------------------------------- budgets
class BudgetError(QgsError):
    """A requested computation exceeds a configured resource budget."""


class DimensionOverBudget(BudgetError):
    pass


class ChannelBudgetExceeded(BudgetError):
    pass


class GridTooCoarse(BudgetError):
    """Grid sampling too coarse to resolve the narrowest feature."""


class BruteForceBudgetExceeded(BudgetError):
    """Brute-force coincidence oracle limits (dimension or grid) exceeded."""


# --------------------------------------------------------------- numerics
class NumericsError(QgsError):
    """A numerical tolerance or convergence guarantee failed."""


class NoConvergence(NumericsError):
    """Krylov subspace hit its dimension cap without reaching tolerance."""


class ConservationViolation(NumericsError):
    pass


class TailNotConverged(NumericsError):
    """Truncated half-line transform tail exceeds the error budget."""


class ZeroNormState(NumericsError):
    pass


# --------------------------------------------------------------- warnings
class ZeroInitialState(UserWarning):
    """All transition dipoles vanish; the initial excited state is zero."""


class WindowClipped(UserWarning):
    """A gate window extends past the available time grid."""
