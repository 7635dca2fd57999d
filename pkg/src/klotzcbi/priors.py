"""Continuous prior distributions over the probability of failure on demand.

Two concrete families are shipped:

* :class:`BetaPrior` -- the usual choice in practice, evaluated through the
  regularized incomplete beta function and a log-space density.
* :class:`PiecewisePrior` -- a piecewise-linear density on a set of knots, so
  that any continuous prior shape can be approximated, not only Beta shapes.

Both are immutable and expose the same surface: ``log_density``, ``density``,
``cdf``, ``mass``, ``inverse_cdf`` and ``log_weighted_integral`` /
``weighted_integral``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

import numpy as np
from scipy.special import betainc, betaln, xlog1py, xlogy

from ._floatbits import from_bits as _float, to_bits as _bits
from .errors import DomainError
from .quadrature import QuadResult, log_integrate

__all__ = [
    "Prior",
    "BetaPrior",
    "PiecewisePrior",
    "prior_from_config",
    "parse_prior",
    "weighted_integral",
    "REFERENCE_PRIORS",
]

DEFAULT_TOL = 1e-10
NORMALIZATION_TOL = 1e-9

LogWeight = Callable[[np.ndarray], np.ndarray]


def _check_unit(value: float, name: str) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise DomainError(f"{name}={value!r} is outside [0, 1]")
    return value


class Prior:
    """Shared behaviour for priors on ``[0, 1]``.

    Subclasses provide ``log_density`` (vectorised), ``cdf`` and ``sf``.
    """

    #: Interior points where the density is not smooth; always used as
    #: quadrature panel boundaries.
    breakpoints: tuple[float, ...] = ()

    def log_density(self, x):  # pragma: no cover - abstract
        raise NotImplementedError

    def cdf(self, u: float) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def sf(self, u: float) -> float:
        return 1.0 - self.cdf(u)

    def density(self, x: float) -> float:
        """Density at ``x``; ``inf`` where it diverges at an endpoint."""
        x = _check_unit(x, "x")
        return float(np.exp(self.log_density(np.float64(x))))

    def mass(self, lo: float, hi: float) -> float:
        """Probability of ``[lo, hi]``, taking the better-conditioned tail."""
        if hi <= lo:
            return 0.0
        c_lo = self.cdf(lo)
        if c_lo <= 0.5:
            return max(0.0, self.cdf(hi) - c_lo)
        return max(0.0, self.sf(lo) - self.sf(hi))

    def inverse_cdf(self, p: float) -> float:
        """Smallest ``u`` (to the last bit) with ``cdf(u) >= p``.

        Bisection runs over the ordered bit patterns of non-negative doubles,
        so it reaches full resolution in at most 64 steps whatever the scale
        of the answer.  The neighbour with the smaller residual is returned.
        """
        p = _check_unit(p, "p")
        if p == 0.0:
            return 0.0
        lo, hi = _bits(0.0), _bits(1.0)
        if self.cdf(1.0) < p:
            return 1.0
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.cdf(_float(mid)) >= p:
                hi = mid
            else:
                lo = mid
        u_hi, u_lo = _float(hi), _float(lo)
        if abs(self.cdf(u_lo) - p) < abs(self.cdf(u_hi) - p):
            return u_lo
        return u_hi

    def inverse_sf(self, p: float) -> float:
        """Smallest ``u`` (to the last bit) with ``sf(u) <= p``; accurate in the upper tail."""
        p = _check_unit(p, "p")
        if p >= 1.0:
            return 0.0
        if self.sf(1.0) > p:  # pragma: no cover - sf(1) is 0 for every shipped prior
            return 1.0
        lo, hi = _bits(0.0), _bits(1.0)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.sf(_float(mid)) <= p:
                hi = mid
            else:
                lo = mid
        u_hi, u_lo = _float(hi), _float(lo)
        if abs(self.sf(u_lo) - p) < abs(self.sf(u_hi) - p):
            return u_lo
        return u_hi

    def point_with_mass(self, start: float, mass: float, direction: str) -> float:
        """The ``c`` with ``mass`` probability between ``start`` and ``c``.

        ``direction="left"`` gives ``c <= start``, ``"right"`` gives ``c >= start``.
        The inversion runs in whichever tail holds the answer, so tiny masses
        far out in either tail are still resolved.
        """
        # Flat stretches of the CDF can put the inverse an ulp past start; clamp.
        if direction == "left":
            lower = self.cdf(start) - mass
            if lower <= 0.5:
                return min(start, self.inverse_cdf(max(0.0, lower)))
            return min(start, self.inverse_sf(min(1.0, self.sf(start) + mass)))
        if direction == "right":
            upper = self.sf(start) - mass
            if upper <= 0.5:
                return max(start, self.inverse_sf(max(0.0, upper)))
            return max(start, self.inverse_cdf(min(1.0, self.cdf(start) + mass)))
        raise ValueError(f"direction must be 'left' or 'right', got {direction!r}")

    def log_weighted_integral(
        self,
        log_weight: LogWeight | None,
        a: float,
        b: float,
        *,
        tol: float = DEFAULT_TOL,
        points: Iterable[float] = (),
    ) -> QuadResult:
        """``log`` of ``int_a^b w(x) f(x) dx`` where ``log_weight`` gives ``log w``."""
        a, b = _check_unit(a, "a"), _check_unit(b, "b")
        if log_weight is None:
            integrand = self.log_density
        else:
            def integrand(x):
                return log_weight(x) + self.log_density(x)
        splits = tuple(points) + self.breakpoints
        return log_integrate(integrand, a, b, tol=tol, points=splits)

    def weighted_integral(self, log_weight: LogWeight | None, a: float, b: float, *,
                          tol: float = DEFAULT_TOL, points: Iterable[float] = ()) -> float:
        return self.log_weighted_integral(log_weight, a, b, tol=tol, points=points).value

    def to_config(self) -> dict[str, Any]:  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def descriptor(self) -> str:  # pragma: no cover - abstract
        raise NotImplementedError


def weighted_integral(prior: Prior, log_weight: LogWeight | None, a: float, b: float,
                      tol: float = DEFAULT_TOL, points: Iterable[float] = ()) -> QuadResult:
    """Functional form of :meth:`Prior.log_weighted_integral`."""
    return prior.log_weighted_integral(log_weight, a, b, tol=tol, points=points)


@dataclass(frozen=True)
class BetaPrior(Prior):
    """Beta(alpha, beta) prior on the pfd."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError(f"Beta shapes must be positive, got ({self.alpha}, {self.beta})")
        object.__setattr__(self, "_log_norm", float(betaln(self.alpha, self.beta)))

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((x < 0) | (x > 1)):
            raise DomainError("x outside [0, 1]")
        # xlogy(0, 0) == 0, so alpha == 1 or beta == 1 stays finite at the ends.
        return xlogy(self.alpha - 1.0, x) + xlog1py(self.beta - 1.0, -x) - self._log_norm

    def cdf(self, u: float) -> float:
        u = _check_unit(u, "u")
        return float(betainc(self.alpha, self.beta, u))

    def sf(self, u: float) -> float:
        u = _check_unit(u, "u")
        return float(betainc(self.beta, self.alpha, 1.0 - u))

    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    def updated(self, n: int) -> "BetaPrior":
        """Posterior after ``n`` failure-free i.i.d. demands."""
        return BetaPrior(self.alpha, self.beta + n)

    def to_config(self) -> dict[str, Any]:
        return {"kind": "beta", "alpha": self.alpha, "beta": self.beta}

    @property
    def descriptor(self) -> str:
        return f"beta({self.alpha:g},{self.beta:g})"


@dataclass(frozen=True)
class PiecewisePrior(Prior):
    """Piecewise-linear density through ``(knots[i], densities[i])``.

    The density is zero outside ``[knots[0], knots[-1]]``.  The CDF is the
    exact integral of the linear pieces (a quadratic on each piece).
    """

    knots: tuple[float, ...]
    densities: tuple[float, ...]
    breakpoints: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        knots = tuple(float(k) for k in self.knots)
        dens = tuple(float(d) for d in self.densities)
        if len(knots) != len(dens) or len(knots) < 2:
            raise DomainError("need matching knots and densities, at least two of each")
        if any(k < 0 or k > 1 for k in knots):
            raise DomainError("knots must lie in [0, 1]")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise DomainError("knots must be strictly increasing")
        if any(d < 0 or not math.isfinite(d) for d in dens):
            raise DomainError("densities must be finite and non-negative")
        k = np.array(knots)
        d = np.array(dens)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(k))])
        total = float(cum[-1])
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise DomainError(f"density integrates to {total!r}, not 1")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "densities", dens)
        object.__setattr__(self, "breakpoints", knots)
        object.__setattr__(self, "_k", k)
        object.__setattr__(self, "_d", d)
        object.__setattr__(self, "_cum", cum / total)
        object.__setattr__(self, "_total", total)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], knots) -> "PiecewisePrior":
        """Sample ``fn`` at ``knots`` and renormalise the linear interpolant."""
        k = np.asarray(knots, dtype=float)
        d = np.asarray(fn(k), dtype=float)
        area = float(np.sum(0.5 * (d[1:] + d[:-1]) * np.diff(k)))
        return cls(tuple(k), tuple(d / area))

    def _pdf(self, x: np.ndarray) -> np.ndarray:
        inside = (x >= self._k[0]) & (x <= self._k[-1])
        return np.where(inside, np.interp(x, self._k, self._d), 0.0) / self._total

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((x < 0) | (x > 1)):
            raise DomainError("x outside [0, 1]")
        with np.errstate(divide="ignore"):
            return np.log(self._pdf(x))

    def cdf(self, u: float) -> float:
        u = _check_unit(u, "u")
        k, d = self._k, self._d
        if u <= k[0]:
            return 0.0
        if u >= k[-1]:
            return 1.0
        i = int(np.searchsorted(k, u, side="right")) - 1
        t = u - k[i]
        slope = (d[i + 1] - d[i]) / (k[i + 1] - k[i])
        piece = (d[i] * t + 0.5 * slope * t * t) / self._total
        return float(min(1.0, self._cum[i] + piece))

    def to_config(self) -> dict[str, Any]:
        return {"kind": "piecewise", "knots": list(self.knots), "densities": list(self.densities)}

    @property
    def descriptor(self) -> str:
        return f"piecewise({len(self.knots)} knots)"


def prior_from_config(cfg: Mapping[str, Any]) -> Prior:
    """Build a prior from ``{"kind": "beta", ...}`` or ``{"kind": "piecewise", ...}``."""
    kind = str(cfg.get("kind", "")).lower()
    if kind == "beta":
        return BetaPrior(float(cfg["alpha"]), float(cfg["beta"]))
    if kind == "piecewise":
        return PiecewisePrior(tuple(cfg["knots"]), tuple(cfg["densities"]))
    raise DomainError(f"unknown prior kind {cfg.get('kind')!r}")


def parse_prior(text: str) -> Prior:
    """Parse the command-line shorthand ``beta:ALPHA,BETA``."""
    kind, _, args = text.partition(":")
    if kind.strip().lower() != "beta":
        raise DomainError(f"cannot parse prior {text!r}; expected beta:ALPHA,BETA")
    try:
        alpha, beta = (float(v) for v in args.split(","))
    except ValueError as exc:
        raise DomainError(f"cannot parse prior {text!r}; expected beta:ALPHA,BETA") from exc
    return BetaPrior(alpha, beta)


#: Beta priors for a pfd bound of 1e-4, from sceptical to optimistic.
REFERENCE_PRIORS = (BetaPrior(2, 20000), BetaPrior(1, 10000), BetaPrior(0.1, 1000))
