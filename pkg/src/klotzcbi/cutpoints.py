"""Support of the worst-case prior: the four cut-points.

Below the bound ``b`` the doubt mass ``phi1`` sits on the ``lambda = 0`` edge
over ``[c1_low, c2_low]``; above it, ``phi2`` sits on the ``lambda = 1`` edge
over ``[c1_high, c2_high]``.  Each interval is the set of prior mass ``phi``
on which the relevant g-function is largest, so its endpoints share a g-value
unless one of them is pinned to ``b``.

The lower pair follows the bisection scheme: pin ``c2_low = b`` when the peak
of ``g_lower`` lies at or beyond ``b`` or when the level set through ``b`` is
too light, otherwise bisect on ``c2_low`` in ``(x_l, b]`` with ``c1_low``
re-solved on the rising branch of ``g_lower``.  The upper pair mirrors this
on ``[b, 1]`` with ``g_upper``: bisect on ``c1_high`` in ``[b, x_u)`` with
``c2_high`` on the falling branch.
"""

from __future__ import annotations

from dataclasses import dataclass

from ._floatbits import bisect_bits
from .errors import DomainError, NonConvergence, PK4Violated
from .gfunctions import GFunctions
from .priors import Prior

__all__ = [
    "CutPoints",
    "classify_case",
    "solve_lower_cutpoints",
    "solve_upper_cutpoints",
    "solve_cutpoints",
    "DEFAULT_EPS",
    "MAX_ITER",
]

DEFAULT_EPS = 1e-10
MAX_ITER = 200


@dataclass(frozen=True)
class Interval:
    """One half of the solution, with its certificates."""

    left: float
    right: float
    mass_residual: float
    g_residual: float
    interior: bool
    iterations: int


@dataclass(frozen=True)
class CutPoints:
    c1_low: float
    c2_low: float
    c1_high: float
    c2_high: float
    case_id: int
    mass_residual_low: float
    mass_residual_high: float
    g_residual_low: float
    g_residual_high: float
    interior_low: bool
    interior_high: bool
    iterations: int = 0

    @property
    def values(self) -> tuple[float, float, float, float]:
        return (self.c1_low, self.c2_low, self.c1_high, self.c2_high)

    @property
    def max_residual(self) -> float:
        return max(self.mass_residual_low, self.mass_residual_high,
                   self.g_residual_low, self.g_residual_high)


def _check_common(g: GFunctions, b: float, phi: float, name: str):
    if not (0.0 < b < 0.5):
        raise DomainError(f"bound b={b!r} must lie in (0, 1/2)")
    if not (0.0 <= phi <= 1.0):
        raise DomainError(f"{name}={phi!r} must lie in [0, 1]")


def classify_case(g: GFunctions, b: float) -> int:
    """Which of the four layouts applies, from the positions of the peaks.

    1: x_l < b, x_u < b;  2: x_l < b, x_u > b;  3: x_l > b, x_u < b;
    4: x_l > b, x_u > b.  A peak exactly at ``b`` counts as the side where
    the cut-point is pinned to ``b``.
    """
    lower_pinned = g.argmax_g_lower >= b
    upper_pinned = g.argmax_g_upper <= b
    return {(False, True): 1, (False, False): 2, (True, True): 3, (True, False): 4}[
        (lower_pinned, upper_pinned)]


def solve_lower_cutpoints(prior: Prior, g: GFunctions, b: float, phi1: float,
                          eps: float = DEFAULT_EPS) -> Interval:
    """``(c1_low, c2_low)`` with ``phi1`` prior mass between them."""
    _check_common(g, b, phi1, "phi1")
    below = prior.cdf(b)
    if below < phi1:
        raise PK4Violated(f"P(X <= b) = {below:.6g} < phi1 = {phi1:.6g}")
    if phi1 == 0.0:
        return Interval(b, b, 0.0, 0.0, False, 0)

    def pinned():
        c1 = prior.point_with_mass(b, phi1, "left")
        return Interval(c1, b, abs(prior.mass(c1, b) - phi1), 0.0, False, 0)

    x_l = g.argmax_g_lower
    if x_l >= b:
        return pinned()
    c = g.partner("lower", b)
    tmp = prior.mass(c, b)
    if tmp < phi1:
        return pinned()

    c2, lb, ub = b, x_l, b
    c1 = c
    it = 0
    while abs(tmp - phi1) > eps:
        if it >= MAX_ITER:
            raise NonConvergence(
                f"lower cut-points: mass residual {abs(tmp - phi1):.3e} after {it} bisections",
                iterations=it, residual=abs(tmp - phi1))
        if tmp > phi1:
            ub = c2
            c2 = 0.5 * (c2 + lb)
        else:
            lb = c2
            c2 = 0.5 * (c2 + ub)
        c1 = g.partner("lower", c2)
        tmp = prior.mass(c1, c2)
        it += 1
    c1, c2, tmp = _polish(
        lambda c: g.partner("lower", c),
        lambda left, right: prior.mass(left, right) >= phi1,
        lb, ub, c1, c2, tmp, phi1, eps, lower=True, prior=prior)
    return Interval(c1, c2, abs(tmp - phi1), abs(g.level_gap("lower", c1, c2)), True, it)


def solve_upper_cutpoints(prior: Prior, g: GFunctions, b: float, phi2: float,
                          eps: float = DEFAULT_EPS) -> Interval:
    """``(c1_high, c2_high)`` with ``phi2`` prior mass between them."""
    _check_common(g, b, phi2, "phi2")
    above = prior.sf(b)
    if above < phi2:
        raise PK4Violated(f"P(X > b) = {above:.6g} < phi2 = {phi2:.6g}")
    if phi2 == 0.0:
        return Interval(b, b, 0.0, 0.0, False, 0)

    def pinned():
        c2 = prior.point_with_mass(b, phi2, "right")
        return Interval(b, c2, abs(prior.mass(b, c2) - phi2), 0.0, False, 0)

    x_u = g.argmax_g_upper
    if x_u <= b:
        return pinned()
    w = g.partner("upper", b)
    tmp = prior.mass(b, w)
    if tmp < phi2:
        return pinned()

    c1, lb, ub = b, b, x_u
    c2 = w
    it = 0
    while abs(tmp - phi2) > eps:
        if it >= MAX_ITER:
            raise NonConvergence(
                f"upper cut-points: mass residual {abs(tmp - phi2):.3e} after {it} bisections",
                iterations=it, residual=abs(tmp - phi2))
        if tmp > phi2:
            lb = c1
            c1 = 0.5 * (c1 + ub)
        else:
            ub = c1
            c1 = 0.5 * (c1 + lb)
        c2 = g.partner("upper", c1)
        tmp = prior.mass(c1, c2)
        it += 1
    c1, c2, tmp = _polish(
        lambda c: g.partner("upper", c),
        lambda left, right: prior.mass(left, right) < phi2,
        lb, ub, c1, c2, tmp, phi2, eps, lower=False, prior=prior)
    return Interval(c1, c2, abs(tmp - phi2), abs(g.level_gap("upper", c1, c2)), True, it)


def _polish(partner, pred, lb, ub, c1, c2, tmp, phi, eps, *, lower, prior):
    """Finish the bisection down to adjacent doubles.

    The stopping point of the tolerance loop depends on the bisection path;
    the bit-level crossing of the mass condition does not, so repeated
    solves of equivalent problems agree exactly.  The refined pair is kept
    only if it meets the tolerance too.
    """
    if lower:
        # Free end is c2 in (lb, ub]; mass grows with c2.
        _, x = bisect_bits(lambda c: pred(partner(c), c), lb, ub)
        left, right = partner(x), x
    else:
        # Free end is c1 in [lb, ub); mass shrinks as c1 grows.
        x, _ = bisect_bits(lambda c: pred(c, partner(c)), lb, ub)
        left, right = x, partner(x)
    mass = prior.mass(left, right)
    if abs(mass - phi) <= eps:
        return left, right, mass
    return c1, c2, tmp


def solve_cutpoints(prior: Prior, n: int, b: float, phi1: float, phi2: float,
                    eps: float = DEFAULT_EPS) -> CutPoints:
    """All four cut-points plus the case label and residual certificates."""
    g = GFunctions(n)
    low = solve_lower_cutpoints(prior, g, b, phi1, eps)
    high = solve_upper_cutpoints(prior, g, b, phi2, eps)
    return CutPoints(
        c1_low=low.left, c2_low=low.right,
        c1_high=high.left, c2_high=high.right,
        case_id=classify_case(g, b),
        mass_residual_low=low.mass_residual, mass_residual_high=high.mass_residual,
        g_residual_low=low.g_residual, g_residual_high=high.g_residual,
        interior_low=low.interior, interior_high=high.interior,
        iterations=low.iterations + high.iterations,
    )
