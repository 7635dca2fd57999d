"""Adaptive Gauss-Kronrod quadrature for positive integrands given in log form.

The integrands met in this package look like ``(1 - x)**n * f(x)`` with ``n``
up to ``1e7``.  On most of ``[0, 1]`` such values sit hundreds of orders of
magnitude below the double-precision underflow threshold, yet the integral is
perfectly representable once its logarithm is taken.  Every panel is therefore
integrated relative to its own largest log-value and the panel sums are
combined with a scaled, compensated sum.

Panels are refined in batches: each round evaluates all panels that must be
split in one vectorised call to the integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import DomainError, NonConvergence

__all__ = ["QuadResult", "log_integrate", "logsumexp"]

# 15-point Kronrod abscissae on [-1, 1] (positive half, descending) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
# 7-point Gauss weights, attached to the odd-indexed Kronrod nodes.
_WG_HALF = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
W_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_wg = np.zeros(8)
_wg[1::2] = _WG_HALF
W_GAUSS = np.concatenate([_wg[:-1], _wg[::-1]])

_EPS = np.finfo(float).eps


def logsumexp(values: Iterable[float]) -> float:
    """Log of a sum of exponentials, accumulated with ``math.fsum``."""
    vals = [v for v in values if v != -math.inf]
    if not vals:
        return -math.inf
    top = max(vals)
    if top == math.inf:
        return math.inf
    return top + math.log(math.fsum(math.exp(v - top) for v in vals))


@dataclass(frozen=True)
class QuadResult:
    """Outcome of :func:`log_integrate`; all magnitudes are stored as logs."""

    log_value: float
    log_error: float
    panels: int

    @property
    def value(self) -> float:
        return math.exp(self.log_value)

    @property
    def error(self) -> float:
        return math.exp(self.log_error)

    @property
    def rel_error(self) -> float:
        if self.log_value == -math.inf:
            return 0.0
        return math.exp(self.log_error - self.log_value)


def _eval_panels(log_f, lo: np.ndarray, hi: np.ndarray):
    """Kronrod estimate and QUADPACK-style error for each panel, in log form."""
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = centre[:, None] + half[:, None] * NODES[None, :]
    lv = np.asarray(log_f(x), dtype=float)
    if lv.shape != x.shape:
        lv = np.broadcast_to(lv, x.shape)
    if np.isnan(lv).any():
        raise DomainError("log-integrand returned NaN inside the interval")
    if np.isposinf(lv).any():
        raise DomainError("log-integrand is +inf at an interior node")

    top = lv.max(axis=1)
    empty = top == -np.inf
    shift = np.where(empty, 0.0, top)
    s = np.exp(lv - shift[:, None])
    resk = s @ W_KRONROD
    resg = s @ W_GAUSS
    reskh = 0.5 * resk
    resasc = np.abs(s - reskh[:, None]) @ W_KRONROD
    diff = np.abs(resk - resg)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(resasc > 0, 200.0 * diff / resasc, 0.0)
        err = np.where(resasc > 0, resasc * np.minimum(1.0, ratio ** 1.5), diff)
    err = np.maximum(err, 50.0 * _EPS * resk)

    with np.errstate(divide="ignore"):
        log_half = np.log(half)
        log_val = np.where(empty, -np.inf, shift + log_half + np.log(resk))
        log_err = np.where(empty, -np.inf, shift + log_half + np.log(err))
    return log_val, log_err


def _log_total(logs: np.ndarray) -> float:
    if logs.size == 0:
        return -math.inf
    top = logs.max()
    if top == -np.inf:
        return -math.inf
    return float(top + math.log(math.fsum(np.exp(logs - top).tolist())))


def log_integrate(
    log_f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    tol: float = 1e-10,
    points: Iterable[float] = (),
    max_panels: int = 2 ** 20,
) -> QuadResult:
    """Integrate ``exp(log_f)`` over ``[a, b]`` to relative tolerance ``tol``.

    ``log_f`` must accept an ndarray of abscissae and return an ndarray of the
    same shape holding ``log`` of a non-negative integrand (``-inf`` for
    zeros).  Nodes never touch ``a`` or ``b``, so integrable endpoint
    singularities are allowed.  ``points`` are mandatory panel boundaries,
    typically where the integrand jumps.

    Raises :class:`NonConvergence` (carrying the achieved relative error)
    if more than ``max_panels`` panels would be required.
    """
    if not (a <= b):
        raise DomainError(f"integration bounds out of order: [{a}, {b}]")
    if a == b:
        return QuadResult(-math.inf, -math.inf, 0)

    edges = np.array(sorted({float(a), float(b), *(float(p) for p in points if a < p < b)}))
    lo, hi = edges[:-1], edges[1:]
    vals, errs = _eval_panels(log_f, lo, hi)
    # Panels too narrow to split any further are kept with their estimate.
    frozen = np.zeros(lo.shape, dtype=bool)
    log_tol = math.log(tol)

    while True:
        log_i = _log_total(vals)
        log_e = _log_total(errs)
        if log_i == -math.inf or log_e <= log_tol + log_i:
            return QuadResult(log_i, log_e, int(lo.size))

        active = ~frozen
        if not active.any():
            return QuadResult(log_i, log_e, int(lo.size))

        # Split the largest-error panels until what remains fits the budget.
        scaled = np.where(active, np.exp(errs - log_e), 0.0)
        order = np.argsort(-scaled)
        budget = 0.25 * math.exp(log_tol + log_i - log_e)
        remaining = 1.0 - np.cumsum(scaled[order])
        k = int(np.searchsorted(-remaining, -budget)) + 1
        k = max(1, min(k, int(active.sum())))
        pick = order[:k]

        if lo.size + k > max_panels:
            raise NonConvergence(
                f"quadrature needs more than {max_panels} panels "
                f"(achieved relative error {math.exp(log_e - log_i):.3e})",
                iterations=int(lo.size),
                residual=math.exp(log_e - log_i),
            )

        plo, phi = lo[pick], hi[pick]
        mid = 0.5 * (plo + phi)
        splittable = (mid > plo) & (mid < phi) & (phi - plo > 8 * _EPS * np.maximum(np.abs(plo), np.abs(phi)))
        frozen[pick[~splittable]] = True
        pick = pick[splittable]
        if pick.size == 0:
            continue
        plo, phi, mid = plo[splittable], phi[splittable], mid[splittable]

        new_lo = np.concatenate([plo, mid])
        new_hi = np.concatenate([mid, phi])
        nv, ne = _eval_panels(log_f, new_lo, new_hi)

        keep = np.ones(lo.size, dtype=bool)
        keep[pick] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])
        frozen = np.concatenate([frozen[keep], np.zeros(new_lo.size, dtype=bool)])
