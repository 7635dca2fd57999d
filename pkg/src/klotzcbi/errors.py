"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class RegionError(DomainError):
    """A (pfd, lambda) pair lies outside the feasible Klotz region."""


class TargetOutOfRange(DomainError):
    """A branch solve was asked for a value the branch cannot attain."""


class PK4Violated(ValueError):
    """Prior mass on either side of the bound cannot hold the doubt mass.

    Raised when ``cdf(b) < phi1`` or ``1 - cdf(b) < phi2``.
    """

    def __init__(self, detail: str = ""):
        msg = "PK4 violated"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class NonConvergence(ArithmeticError):
    """An iterative routine stopped before reaching its tolerance."""

    def __init__(self, msg: str, *, iterations: int | None = None,
                 residual: float | None = None):
        super().__init__(msg)
        self.iterations = iterations
        self.residual = residual


class ZeroLikelihood(ArithmeticError):
    """Every support point of a joint prior has zero likelihood."""
