"""Conservative posterior confidence in a pfd bound after failure-free testing.

Given a continuous pfd prior ``f``, a bound ``b``, ``n`` failure-free demands
and doubt masses ``phi1`` (negative dependence) and ``phi2`` (positive
dependence), the smallest posterior confidence ``P(X <= b | data)`` over all
joint priors of ``(X, Lambda)`` consistent with those beliefs is ``1/(1+Q)``,

    Q = int_b^1 w_up(x) f(x) dx / int_0^b w_low(x) f(x) dx

with

    w_up(x)  = 1 - x                                on (c1_high, c2_high),
               (1 - x)**n                           elsewhere on (b, 1)
    w_low(x) = (1 - 2x)**(n-1) / (1 - x)**(n-2)     on (c1_low, c2_low),
               (1 - x)**n                           elsewhere on (0, b).

With no doubts this is ordinary Bayesian inference with the i.i.d. Bernoulli
likelihood.  Every integral is accumulated as a logarithm, so ``Q`` may be
astronomically large or small without overflow.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from .cutpoints import DEFAULT_EPS, CutPoints, solve_cutpoints
from .errors import DomainError, PK4Violated, ZeroLikelihood
from .klotz import in_region, likelihood_ff
from .priors import DEFAULT_TOL, BetaPrior, Prior
from .quadrature import logsumexp

__all__ = [
    "AssessmentProblem",
    "ConfidenceResult",
    "QValue",
    "QBounds",
    "DiscreteJointPrior",
    "compute_q",
    "conservative_confidence",
    "iid_posterior",
    "iid_posterior_closed_form",
    "posterior_for_joint_prior",
    "worst_case_prior",
    "asymptotic_q_bounds",
    "confidence_from_log_q",
    "ROW_FIELDS",
]

log = logging.getLogger(__name__)


# -- log weights --------------------------------------------------------------

def _log_diag(n: int):
    """``log L(x, x; n) = n log(1 - x)``."""
    def w(x):
        with np.errstate(divide="ignore"):
            return n * np.log1p(-x)
    return w


def _log_neg(n: int):
    """``log L(x, 0; n)``; only ever integrated below ``b < 1/2``."""
    def w(x):
        if np.any(x > 0.5):
            raise DomainError("lambda=0 weight evaluated above x=1/2")
        with np.errstate(divide="ignore"):
            return (n - 1) * np.log1p(-2.0 * x) - (n - 2) * np.log1p(-x)
    return w


def _log_pos(x):
    """``log L(x, 1; n) = log(1 - x)``."""
    with np.errstate(divide="ignore"):
        return np.log1p(-x)


# -- problem and results ------------------------------------------------------

@dataclass(frozen=True)
class AssessmentProblem:
    """Inputs to the conservative bound.

    ``b`` must lie in ``(0, 1/2)`` and ``n >= 2``.  The doubts must fit the
    prior on each side of the bound, ``phi1 <= P(X <= b) <= 1 - phi2``;
    :meth:`check_pk4` enforces that and the solvers call it.
    """

    b: float
    n: int
    prior: Prior
    phi1: float = 0.0
    phi2: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.b < 0.5):
            raise DomainError(f"b={self.b!r} must lie in (0, 1/2)")
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n={self.n!r} must be an integer >= 2 (use iid_posterior for n < 2)")
        object.__setattr__(self, "n", int(self.n))
        for name in ("phi1", "phi2"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{name}={v!r} must lie in [0, 1]")
        if self.phi1 + self.phi2 > 1.0:
            raise DomainError("phi1 + phi2 must not exceed 1")

    def check_pk4(self) -> None:
        below = self.prior.cdf(self.b)
        if below < self.phi1:
            raise PK4Violated(f"P(X <= b) = {below:.6g} < phi1 = {self.phi1:.6g}")
        if 1.0 - below < self.phi2 and self.prior.sf(self.b) < self.phi2:
            raise PK4Violated(f"P(X > b) = {1.0 - below:.6g} < phi2 = {self.phi2:.6g}")


@dataclass(frozen=True)
class QValue:
    log_q: float
    log_numerator: float
    log_denominator: float
    cutpoints: CutPoints
    quadrature_error: float

    @property
    def q(self) -> float:
        return math.exp(self.log_q) if self.log_q < 709.0 else math.inf


@dataclass(frozen=True)
class ConfidenceResult:
    q_value: float
    log_q: float
    conservative_confidence: float
    iid_confidence: float
    cutpoints: CutPoints
    quadrature_error: float
    problem: AssessmentProblem | None = None

    @property
    def gap(self) -> float:
        return self.iid_confidence - self.conservative_confidence

    def to_row(self) -> dict[str, object]:
        """Flat record with every input and certificate, keyed by :data:`ROW_FIELDS`."""
        pr, cp = self.problem, self.cutpoints
        row = {
            "b": pr.b, "n": pr.n, "phi1": pr.phi1, "phi2": pr.phi2,
            "prior": pr.prior.descriptor,
            "c1_low": cp.c1_low, "c2_low": cp.c2_low,
            "c1_high": cp.c1_high, "c2_high": cp.c2_high,
            "case_id": cp.case_id, "q": self.q_value, "log_q": self.log_q,
            "conservative": self.conservative_confidence, "iid": self.iid_confidence,
            "mass_residual_low": cp.mass_residual_low,
            "mass_residual_high": cp.mass_residual_high,
            "g_residual_low": cp.g_residual_low,
            "g_residual_high": cp.g_residual_high,
            "quadrature_error": self.quadrature_error,
            "status": "ok",
        }
        return row


#: Column order of :meth:`ConfidenceResult.to_row`.
ROW_FIELDS = (
    "b", "n", "phi1", "phi2", "prior",
    "c1_low", "c2_low", "c1_high", "c2_high", "case_id",
    "q", "log_q", "conservative", "iid",
    "mass_residual_low", "mass_residual_high", "g_residual_low", "g_residual_high",
    "quadrature_error", "status",
)


def confidence_from_log_q(log_q: float) -> float:
    """``1 / (1 + exp(log_q))`` without overflow at either extreme."""
    return float(expit(-log_q))


def _integrate_pieces(prior: Prior, pieces, tol: float, splits: Sequence[float]):
    """Sum of log-weighted integrals over ``(lo, hi, log_weight)`` pieces."""
    logs, rel_errs = [], []
    for lo, hi, lw in pieces:
        if hi <= lo:
            continue
        res = prior.log_weighted_integral(lw, lo, hi, tol=tol,
                                          points=[s for s in splits if lo < s < hi])
        logs.append(res.log_value)
        rel_errs.append((res.log_value, res.log_error))
    total = logsumexp(logs)
    err = logsumexp(e for _, e in rel_errs)
    rel = 0.0 if total == -math.inf else math.exp(err - total)
    return total, rel


def compute_q(problem: AssessmentProblem, *, eps: float = DEFAULT_EPS,
              tol: float = DEFAULT_TOL, cutpoints: CutPoints | None = None) -> QValue:
    """Solve the cut-points, then integrate the worst-case numerator and denominator.

    Panels are split exactly at every cut-point, where the weights jump.
    """
    problem.check_pk4()
    p, n, b = problem.prior, problem.n, problem.b
    cp = cutpoints or solve_cutpoints(p, n, b, problem.phi1, problem.phi2, eps)
    c1l, c2l, c1h, c2h = cp.values
    if not (0.0 <= c1l <= c2l <= b <= c1h <= c2h <= 1.0):
        raise DomainError(f"cut-points out of order: {cp.values}")
    diag, neg = _log_diag(n), _log_neg(n)
    splits = (c1l, c2l, b, c1h, c2h)

    log_den, rel_den = _integrate_pieces(
        p, [(0.0, c1l, diag), (c1l, c2l, neg), (c2l, b, diag)], tol, splits)
    log_num, rel_num = _integrate_pieces(
        p, [(b, c1h, diag), (c1h, c2h, _log_pos), (c2h, 1.0, diag)], tol, splits)

    if log_den == -math.inf:
        log.warning("denominator of Q is zero: confidence indistinguishable from 0")
        log_q = math.inf
    else:
        log_q = log_num - log_den
    return QValue(log_q, log_num, log_den, cp, rel_den + rel_num)


def iid_posterior(prior: Prior, b: float, n: int, *, tol: float = DEFAULT_TOL) -> float:
    """Posterior ``P(X <= b)`` under i.i.d. demands, by quadrature."""
    if int(n) != n or n < 0:
        raise DomainError(f"n={n!r} must be a non-negative integer")
    if not (0.0 <= b <= 1.0):
        raise DomainError(f"b={b!r} must lie in [0, 1]")
    if n == 0:
        return prior.cdf(b)
    diag = _log_diag(int(n))
    below = prior.log_weighted_integral(diag, 0.0, b, tol=tol).log_value
    above = prior.log_weighted_integral(diag, b, 1.0, tol=tol).log_value
    if below == -math.inf:
        return 0.0
    return confidence_from_log_q(above - below)


def iid_posterior_closed_form(prior: BetaPrior, b: float, n: int) -> float:
    """Conjugate form: the posterior is ``Beta(alpha, beta + n)``."""
    if not isinstance(prior, BetaPrior):
        raise TypeError("closed form exists only for Beta priors")
    return prior.updated(int(n)).cdf(b)


def conservative_confidence(problem: AssessmentProblem, *, eps: float = DEFAULT_EPS,
                            tol: float = DEFAULT_TOL) -> ConfidenceResult:
    qv = compute_q(problem, eps=eps, tol=tol)
    iid = iid_posterior(problem.prior, problem.b, problem.n, tol=tol)
    return ConfidenceResult(
        q_value=qv.q,
        log_q=qv.log_q,
        conservative_confidence=confidence_from_log_q(qv.log_q),
        iid_confidence=iid,
        cutpoints=qv.cutpoints,
        quadrature_error=qv.quadrature_error,
        problem=problem,
    )


# -- explicit joint priors ----------------------------------------------------

@dataclass(frozen=True)
class DiscreteJointPrior:
    """Finitely many atoms ``(x, lambda, mass)`` in the Klotz region."""

    x: np.ndarray
    lam: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        lam = np.asarray(self.lam, dtype=float).ravel()
        m = np.asarray(self.mass, dtype=float).ravel()
        if not (x.shape == lam.shape == m.shape):
            raise DomainError("atoms need matching x, lambda and mass arrays")
        if np.any(m <= 0):
            raise DomainError("atom masses must be positive")
        if abs(math.fsum(m.tolist()) - 1.0) > 1e-12:
            raise DomainError(f"atom masses sum to {math.fsum(m.tolist())!r}, not 1")
        if not np.all(in_region(x, lam)):
            raise DomainError("atom outside the Klotz region")
        for name, arr in (("x", x), ("lam", lam), ("mass", m)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, float, float]]) -> "DiscreteJointPrior":
        arr = np.array(list(atoms), dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    def __len__(self) -> int:
        return int(self.x.size)

    def prob(self, mask: np.ndarray) -> float:
        return math.fsum(self.mass[mask].tolist())


def posterior_for_joint_prior(joint: DiscreteJointPrior, b: float, n: int) -> float:
    """Posterior ``P(X <= b)`` for a discrete joint prior, by direct summation."""
    lik = np.asarray(likelihood_ff(joint.x, joint.lam, n), dtype=float)
    weighted = lik * joint.mass
    total = math.fsum(weighted.tolist())
    if total == 0.0:
        raise ZeroLikelihood("every atom has zero likelihood for the observed data")
    return math.fsum(weighted[joint.x <= b].tolist()) / total


def worst_case_prior(problem: AssessmentProblem, cutpoints: CutPoints | None = None,
                     points: int = 10_000) -> DiscreteJointPrior:
    """Discretise the worst-case joint prior onto about ``points`` atoms.

    Each region between consecutive cut-points is cut into equal cells; a
    cell's prior mass goes to its midpoint, on the diagonal, on the
    ``lambda = 0`` edge (``(c1_low, c2_low)``) or on the ``lambda = 1`` edge
    (``(c1_high, c2_high)``).
    """
    cp = cutpoints or solve_cutpoints(problem.prior, problem.n, problem.b,
                                      problem.phi1, problem.phi2)
    c1l, c2l, c1h, c2h = cp.values
    regions = [(0.0, c1l, "diag"), (c1l, c2l, "neg"), (c2l, problem.b, "diag"),
               (problem.b, c1h, "diag"), (c1h, c2h, "pos"), (c2h, 1.0, "diag")]
    xs, lams, ms = [], [], []
    for lo, hi, kind in regions:
        if hi <= lo:
            continue
        k = max(1, int(round(points * (hi - lo))))
        edges = np.linspace(lo, hi, k + 1)
        for a, c in zip(edges[:-1], edges[1:]):
            m = problem.prior.mass(a, c)
            if m <= 0:
                continue
            mid = 0.5 * (a + c)
            xs.append(mid)
            lams.append({"diag": mid, "neg": 0.0, "pos": 1.0}[kind])
            ms.append(m)
    m = np.array(ms)
    return DiscreteJointPrior(np.array(xs), np.array(lams), m / math.fsum(m.tolist()))


# -- asymptotic bounds --------------------------------------------------------

@dataclass(frozen=True)
class QBounds:
    """Bracket ``lower <= Q <= upper`` from chord and tangent lines of ``(1-x)**n``."""

    lower: float
    upper: float
    log_lower: float
    log_upper: float
    diverges: bool


def _moment(prior: Prior, lo: float, hi: float, tol: float):
    """``(log mass, mean)`` of the prior restricted to ``[lo, hi]``.

    The mass is integrated in log space when it is too small for the cdf.
    """
    if hi <= lo:
        return -math.inf, None
    m = prior.mass(lo, hi)
    if m > 1e-280:
        lm = math.log(m)
    else:
        lm = prior.log_weighted_integral(None, lo, hi, tol=tol).log_value
        if lm == -math.inf:
            return -math.inf, None
    with np.errstate(divide="ignore"):
        lx = prior.log_weighted_integral(np.log, lo, hi, tol=tol).log_value
    mean = math.exp(lx - lm)
    return lm, min(max(mean, lo), hi)


def _log_chord(n: int, lo: float, hi: float, at: float) -> float:
    """log of the chord of ``(1-x)**n`` through ``lo`` and ``hi``, evaluated at ``at``."""
    if hi <= lo:
        return n * math.log1p(-lo)
    terms = []
    if hi - at > 0:
        terms.append(n * math.log1p(-lo) + math.log(hi - at))
    if at - lo > 0 and hi < 1.0:
        terms.append(n * math.log1p(-hi) + math.log(at - lo))
    return logsumexp(terms) - math.log(hi - lo)


def asymptotic_q_bounds(problem: AssessmentProblem, cutpoints: CutPoints | None = None,
                        *, tol: float = DEFAULT_TOL) -> QBounds:
    """Jensen-type bracket for ``Q``.

    On each diagonal piece ``int (1-x)**n f`` is at most the chord of
    ``(1-x)**n`` at the conditional mean times the piece's mass and at least
    the tangent value ``(1 - mean)**n`` times the mass.  For ``phi2 == 0``
    the upper bound drops the ``lambda = 0`` contribution from the
    denominator and tends to 0 as ``n`` grows.  For ``phi2 > 0`` ``Q``
    diverges with ``n`` and the upper bound is ``inf``; the lower bound keeps
    the exact ``lambda = 1`` piece and stays bounded away from 0.
    """
    problem.check_pk4()
    p, n, b = problem.prior, problem.n, problem.b
    cp = cutpoints or solve_cutpoints(p, n, b, problem.phi1, problem.phi2)
    c1l, c2l, c1h, c2h = cp.values

    def tangent_terms(pieces):
        out = []
        for lo, hi in pieces:
            lm, mean = _moment(p, lo, hi, tol)
            if mean is not None:
                out.append(n * math.log1p(-mean) + lm)
        return out

    def chord_terms(pieces):
        out = []
        for lo, hi in pieces:
            lm, mean = _moment(p, lo, hi, tol)
            if mean is not None:
                out.append(_log_chord(n, lo, hi, mean) + lm)
        return out

    # Lower bound: tangents above b, plus the exact linear piece; chords below b
    # (the lambda=0 weight never exceeds (1-x)**n, so its chord bounds it too).
    num_lo = tangent_terms([(b, c1h), (c2h, 1.0)])
    lm_pos, mean_pos = _moment(p, c1h, c2h, tol)
    if mean_pos is not None:
        num_lo.append(math.log1p(-mean_pos) + lm_pos)
    den_hi = chord_terms([(0.0, c1l), (c1l, c2l), (c2l, b)])
    log_lower = logsumexp(num_lo) - logsumexp(den_hi)

    if problem.phi2 > 0:
        log_upper = math.inf
        diverges = True
    else:
        lm_up, mean_up = _moment(p, b, 1.0, tol)
        # Chord of (1-x)**n on [b, 1] at the mean, scaled by (1-b)**-n.
        num_hi = (math.log1p(-mean_up) - math.log1p(-b) + lm_up
                  if mean_up is not None else -math.inf)
        den_lo = []
        for lo, hi in ((0.0, c1l), (c2l, b)):
            lm, mean = _moment(p, lo, hi, tol)
            if mean is not None:
                den_lo.append(n * (math.log1p(-mean) - math.log1p(-b)) + lm)
        log_upper = num_hi - logsumexp(den_lo) if den_lo else math.inf
        diverges = False

    def _exp(v):
        return math.exp(v) if v < 709 else math.inf

    return QBounds(_exp(log_lower), _exp(log_upper), log_lower, log_upper, diverges)
