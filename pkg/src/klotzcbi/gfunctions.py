"""Likelihood-gap functions that decide where doubt mass is worst placed.

For ``n`` failure-free demands:

    g_lower(x) = L(x, x; n) - L(x, 0; n)
               = (1 - x)**n - (1 - 2x)**(n - 1) / (1 - x)**(n - 2),   0 <= x <= 1/2
    g_upper(x) = L(x, 1; n) - L(x, x; n) = (1 - x) - (1 - x)**n,        0 <= x <= 1

Both are unimodal.  ``g_upper`` peaks at ``1 - n**(-1/(n-1))``; the peak of
``g_lower`` has no closed form and is located numerically.  Each function is
strictly monotone on either side of its peak, which is what
:meth:`GFunctions.solve_on_branch` relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._floatbits import bisect_bits, from_bits as _float, to_bits as _bits
from .errors import DomainError, TargetOutOfRange

__all__ = ["GFunctions"]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_SOLVE_TOL = 1e-14


def _scaled_expm1(log_scale: float, step: float, log_end: float) -> float:
    """``exp(log_end) - exp(log_scale)`` where ``log_end = log_scale + step``.

    Small steps go through ``expm1``; large ones, where nothing cancels,
    use ``log_end`` evaluated directly by the caller.
    """
    if abs(step) > 1.0:
        return math.exp(log_end) - math.exp(log_scale)
    return math.exp(log_scale) * math.expm1(step)


@dataclass(frozen=True)
class GFunctions:
    """The pair ``g_lower``, ``g_upper`` for a fixed demand count ``n >= 2``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    # -- evaluation -----------------------------------------------------

    def log_g_lower(self, x):
        """``log g_lower``; the gap is formed as ``-expm1`` of a log-ratio."""
        x = np.asarray(x, dtype=float)
        if np.any((x < 0) | (x > 0.5)):
            raise DomainError("g_lower is defined on [0, 1/2]")
        n = self.n
        with np.errstate(divide="ignore", invalid="ignore"):
            l1x = np.log1p(-x)
            # log L(x,0;n) - log L(x,x;n) = (n-1) log((1-2x)/(1-x)**2), and
            # (1-2x)/(1-x)**2 = 1 - (x/(1-x))**2 avoids cancelling two logs.
            r = x / (1.0 - x)
            d = (n - 1) * np.log1p(-r * r)
            out = n * l1x + np.log(-np.expm1(d))
        return out if out.ndim else float(out)

    def g_lower(self, x):
        out = np.exp(self.log_g_lower(x))
        return out if np.ndim(out) else float(out)

    def log_g_upper(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((x < 0) | (x > 1)):
            raise DomainError("g_upper is defined on [0, 1]")
        with np.errstate(divide="ignore", invalid="ignore"):
            l1x = np.log1p(-x)
            out = l1x + np.log(-np.expm1((self.n - 1) * l1x))
        return out if out.ndim else float(out)

    def g_upper(self, x):
        out = np.exp(self.log_g_upper(x))
        return out if np.ndim(out) else float(out)

    def g(self, which: str, x):
        if which == "lower":
            return self.g_lower(x)
        if which == "upper":
            return self.g_upper(x)
        raise ValueError(f"which must be 'lower' or 'upper', got {which!r}")

    # -- maximisers -----------------------------------------------------

    @cached_property
    def argmax_g_upper(self) -> float:
        """Closed form ``1 - n**(-1/(n-1))``, where ``n (1-x)**(n-1) = 1``."""
        n = self.n
        return float(-math.expm1(-math.log(n) / (n - 1)))

    def _slope_sign_lower(self, x: float) -> float:
        """A function with the sign of ``g_lower'(x)`` on ``(0, 1/2)``.

        ``g_lower' > 0`` iff ``(n-2) log(1-2x) - 2(n-1) log(1-x) + log(1-2x/n) > 0``,
        regrouped as ``(n-2) log(1 - r**2) + log(1 + x(2(n-1)/n - x)/(1-x)**2)``
        with ``r = x/(1-x)`` so that no two large logs cancel.
        """
        n = self.n
        r = x / (1.0 - x)
        return ((n - 2) * math.log1p(-r * r)
                + math.log1p(x * (2.0 * (n - 1) / n - x) / (1.0 - x) ** 2))

    @cached_property
    def argmax_g_lower(self) -> float:
        """Maximiser of ``g_lower`` on ``[0, 1/2]``.

        Golden-section search on ``log g_lower`` brackets the peak; bisection
        on the sign of the analytic slope then pins it to the last bit.
        At ``n = 2`` the function is ``x**2`` and the answer is ``1/2``.
        """
        n = self.n
        if n == 2 or self._slope_sign_lower(0.5 * (1 - 1e-15)) > 0:
            return 0.5

        def lg(x):
            return float(self.log_g_lower(x))

        a, b = 0.0, 0.5
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc, fd = lg(c), lg(d)
        for _ in range(200):
            if b - a <= 1e-3 * c:
                break
            if fc > fd:
                b, d, fd = d, c, fc
                c = b - _GOLDEN * (b - a)
                fc = lg(c)
            else:
                a, c, fc = c, d, fd
                d = a + _GOLDEN * (b - a)
                fd = lg(d)

        lo, hi = a, b
        if not (lo > 0 and self._slope_sign_lower(lo) > 0):
            lo = 0.0
        if not (hi < 0.5 and self._slope_sign_lower(hi) < 0):
            hi = 0.5
        lo_b, hi_b = _bits(lo), _bits(hi)
        while hi_b - lo_b > 1:
            mid = (lo_b + hi_b) // 2
            xm = _float(mid)
            if xm > 0 and self._slope_sign_lower(xm) > 0:
                lo_b = mid
            else:
                hi_b = mid
        x_lo, x_hi = _float(lo_b), _float(hi_b)
        return x_lo if lg(x_lo) >= lg(x_hi) else x_hi

    def argmax(self, which: str) -> float:
        return self.argmax_g_lower if which == "lower" else self.argmax_g_upper

    # -- level sets -----------------------------------------------------

    def level_gap(self, which: str, a: float, x: float) -> float:
        """``g(x) - g(a)``, formed from the increment ``x - a``.

        Subtracting two evaluated g-values loses everything below the
        rounding level of ``g`` itself, which near the peak of ``g_upper``
        (close to 1) limits level-set matching to about ``sqrt(ulp)`` in
        ``x``.  Written in terms of ``log1p`` of the increment the
        difference keeps full relative accuracy.
        """
        n = self.n
        a, x = float(a), float(x)
        if a == x:
            return 0.0
        if which == "upper" and (a == 1.0 or x == 1.0):
            return self.g_upper(x) - self.g_upper(a)
        # log((1-x)**n / (1-a)**n)
        step = n * math.log1p((a - x) / (1.0 - a))
        if which == "upper":
            # (1-x) - (1-a) - [(1-x)**n - (1-a)**n]
            return (a - x) - _scaled_expm1(n * math.log1p(-a), step, n * math.log1p(-x))
        if which != "lower":
            raise ValueError(f"which must be 'lower' or 'upper', got {which!r}")
        if not (0.0 <= a <= 0.5 and 0.0 <= x <= 0.5):
            raise DomainError("g_lower is defined on [0, 1/2]")
        if n == 2:
            return (x - a) * (x + a)  # g_lower = x**2
        # g = D - E with D = (1-t)**n and E = (1-2t)**(n-1) / (1-t)**(n-2).
        log_d_a, log_d_x = n * math.log1p(-a), n * math.log1p(-x)
        if x == 0.5 or a == 0.5:
            # E vanishes at 1/2.
            def e(t):
                return 0.0 if t == 0.5 else math.exp((n - 1) * math.log1p(-2.0 * t)
                                                     - (n - 2) * math.log1p(-t))
            return _scaled_expm1(log_d_a, step, log_d_x) - (e(x) - e(a))
        ra, rx = a / (1.0 - a), x / (1.0 - x)
        # 1 - r**2 = (1-2t)/(1-t)**2 stays accurate as t approaches 1/2;
        # log1p(-r**2) keeps relative accuracy when r is small.
        one_m_ra2 = (1.0 - 2.0 * a) / (1.0 - a) ** 2
        one_m_rx2 = (1.0 - 2.0 * x) / (1.0 - x) ** 2
        log_e_a = log_d_a + (n - 1) * (math.log1p(-ra * ra) if ra < 0.5 else math.log(one_m_ra2))
        log_e_x = log_d_x + (n - 1) * (math.log1p(-rx * rx) if rx < 0.5 else math.log(one_m_rx2))
        # log(1 - rx**2) - log(1 - ra**2) with rx**2 - ra**2 = (rx - ra)(rx + ra)
        dr = (x - a) / ((1.0 - a) * (1.0 - x))
        shift = (n - 1) * math.log1p(-dr * (rx + ra) / one_m_ra2)
        if abs(step) > 1.0 or abs(step + shift) > 1.0:
            # Either subtract the g-values (error ~ ulp(g)) or difference each
            # term separately (error ~ ulp of the term differences), whichever
            # rounds less.
            d_gap = _scaled_expm1(log_d_a, step, log_d_x)
            e_gap = _scaled_expm1(log_e_a, step + shift, log_e_x)
            g_a, g_x = self.g_lower(a), self.g_lower(x)
            if max(abs(d_gap), abs(e_gap)) < max(g_a, g_x):
                return d_gap - e_gap
            return g_x - g_a
        # g(x) - g(a) = g(a) expm1(step) - E(a) exp(step) expm1(shift).
        g_a = self.g_lower(a)
        return g_a * math.expm1(step) - math.exp(log_e_a + step) * math.expm1(shift)

    def partner(self, which: str, c: float) -> float:
        """The point on the other side of the peak where ``g`` equals ``g(c)``."""
        apex = self.argmax(which)
        end = 0.5 if which == "lower" else 1.0
        c = float(c)
        if c == apex:
            return apex
        gap = lambda x: self.level_gap(which, c, x)  # noqa: E731
        if c > apex:
            # Ascending branch: gap rises from g(0) - g(c) <= 0 to a positive apex value.
            if gap(0.0) >= 0:
                return 0.0
            _, hi = bisect_bits(lambda x: gap(x) >= 0, 0.0, apex)
            lo = _float(_bits(hi) - 1)
            return lo if abs(gap(lo)) < abs(gap(hi)) else hi
        if gap(end) >= 0:
            return end
        lo, hi = bisect_bits(lambda x: gap(x) < 0, apex, end)
        return lo if abs(gap(lo)) <= abs(gap(hi)) else hi

    # -- branch solves --------------------------------------------------

    def solve_on_branch(self, which: str, target: float, branch: str,
                        lo: float | None = None, hi: float | None = None) -> float:
        """The unique ``x`` on one monotone branch with ``g(x) == target``.

        ``branch="ascending"`` searches ``[lo, argmax]`` (``lo`` defaults to
        0); ``branch="descending"`` searches ``[argmax, hi]`` (``hi``
        defaults to the end of the domain).  Bisection runs over the bit
        patterns of the bracket, so the result is the best double available.
        """
        apex = self.argmax(which)
        end = 0.5 if which == "lower" else 1.0
        if branch == "ascending":
            a, b = (0.0 if lo is None else float(lo)), apex
            increasing = True
        elif branch == "descending":
            a, b = apex, (end if hi is None else float(hi))
            increasing = False
        else:
            raise ValueError(f"branch must be 'ascending' or 'descending', got {branch!r}")
        if not (0.0 <= a <= b <= end):
            raise DomainError(f"bad {branch} bracket [{a}, {b}] for g_{which}")

        g = lambda x: float(self.g(which, x))  # noqa: E731
        ga, gb = g(a), g(b)
        low_val, high_val = (ga, gb) if increasing else (gb, ga)
        slack = _SOLVE_TOL
        if not (low_val - slack <= target <= high_val + slack):
            raise TargetOutOfRange(
                f"target {target!r} not attainable on the {branch} branch of g_{which} "
                f"over [{a!r}, {b!r}]; attainable range is [{low_val!r}, {high_val!r}]"
            )
        if target >= high_val:
            return b if increasing else a
        if target <= low_val:
            return a if increasing else b

        a_b, b_b = _bits(a), _bits(b)
        while b_b - a_b > 1:
            mid = (a_b + b_b) // 2
            above = g(_float(mid)) >= target
            if above == increasing:
                b_b = mid
            else:
                a_b = mid
        xa, xb = _float(a_b), _float(b_b)
        return xa if abs(g(xa) - target) <= abs(g(xb) - target) else xb
