"""Brute-force checks for the analytic pipeline.

* :func:`grid_infimum` discretises the pfd axis into strips and searches
  explicit joint priors directly, evaluating the posterior by summation.
* :func:`mc_likelihood` estimates the failure-free probability by simulating
  Klotz chains.
* :func:`beta_conjugate_posterior` evaluates the conjugate Beta posterior in
  multiple precision, independently of scipy.

These are meant for small instances (``n`` up to a few dozen, ``b`` not tiny),
where every likelihood is far from underflow.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .engine import DiscreteJointPrior, posterior_for_joint_prior
from .errors import DomainError, PK4Violated
from .klotz import KlotzParams, likelihood_ff, simulate_chains
from .priors import Prior

__all__ = [
    "GridSpec",
    "GridResult",
    "grid_infimum",
    "mc_likelihood",
    "beta_conjugate_posterior",
]


@dataclass(frozen=True)
class GridSpec:
    """Partition of ``[0, 1]`` into ``strips`` equal strips, plus a cut at ``b``.

    All the mass a candidate prior puts in a strip sits at the strip midpoint,
    on the diagonal, on the ``lambda = 0`` edge (strips below ``b``) or on the
    ``lambda = 1`` edge (strips above ``b``).
    """

    strips: int

    def __post_init__(self):
        if int(self.strips) != self.strips or self.strips < 2:
            raise DomainError(f"need at least 2 strips, got {self.strips!r}")

    def edges(self, b: float) -> np.ndarray:
        e = np.linspace(0.0, 1.0, int(self.strips) + 1)
        return np.unique(np.concatenate([e, [b]]))


@dataclass(frozen=True)
class GridResult:
    confidence: float
    witness: DiscreteJointPrior
    candidates: int


def _contiguous_fills(masses: np.ndarray, phi: float):
    """Every contiguous way to put ``phi`` into strips, fractional at one end.

    Yields arrays ``t`` with ``0 <= t <= masses`` and ``sum(t) == phi``: for each
    start strip, fill rightwards; for each end strip, fill leftwards.
    """
    k = masses.size
    cum = np.concatenate([[0.0], np.cumsum(masses)])
    for start in range(k):
        t = np.zeros(k)
        need = phi
        for j in range(start, k):
            take = min(masses[j], need)
            t[j] = take
            need -= take
            if need <= 0:
                break
        if need <= 1e-15 * max(phi, 1.0):
            yield t
    for end in range(k):
        t = np.zeros(k)
        need = phi
        for j in range(end, -1, -1):
            take = min(masses[j], need)
            t[j] = take
            need -= take
            if need <= 0:
                break
        if need <= 1e-15 * max(phi, 1.0) and cum[end + 1] >= phi:
            yield t


def _vertex_fills(masses: np.ndarray, phi: float):
    """All vertices of ``{0 <= t <= masses, sum t = phi}``: any subset full, one strip partial."""
    k = masses.size
    for r in range(k + 1):
        for subset in itertools.combinations(range(k), r):
            full = math.fsum(masses[list(subset)].tolist())
            rest = phi - full
            if rest < -1e-15:
                continue
            base = np.zeros(k)
            base[list(subset)] = masses[list(subset)]
            if abs(rest) <= 1e-15:
                yield base
                continue
            for j in range(k):
                if j not in subset and masses[j] >= rest:
                    t = base.copy()
                    t[j] = rest
                    yield t


def _best(fills, gain: np.ndarray, sign: float):
    """The fill minimising ``sign * (t . gain)``, with the number tried."""
    best, best_val, count = None, math.inf, 0
    for t in fills:
        count += 1
        v = sign * math.fsum((t * gain).tolist())
        if v < best_val:
            best, best_val = t, v
    return best, count


def grid_infimum(prior: Prior, b: float, n: int, phi1: float, phi2: float,
                 grid: GridSpec, *, contiguous: bool = True) -> GridResult:
    """Smallest posterior ``P(X <= b)`` over grid priors with the given doubts.

    Strip masses come from the prior.  ``phi1`` is moved onto ``lambda = 0``
    below ``b`` and ``phi2`` onto ``lambda = 1`` above it; the rest stays on
    the diagonal.  The posterior is ``B / (B + A)`` where the ``phi1``
    placement only changes ``B`` and the ``phi2`` placement only changes
    ``A``, so each side is optimised separately and exactly.

    ``contiguous=False`` replaces the interval search with every vertex of
    the placement polytope; exponential, for checking small grids only.
    """
    if not (0.0 < b < 0.5):
        raise DomainError(f"b={b!r} must lie in (0, 1/2)")
    edges = grid.edges(b)
    mids = 0.5 * (edges[:-1] + edges[1:])
    masses = np.array([prior.mass(a, c) for a, c in zip(edges[:-1], edges[1:])])
    low = mids < b
    m_lo, m_hi = masses[low], masses[~low]
    x_lo, x_hi = mids[low], mids[~low]
    if math.fsum(m_lo.tolist()) < phi1:
        raise PK4Violated(f"grid mass below b {math.fsum(m_lo.tolist()):.6g} < phi1 = {phi1:.6g}")
    if math.fsum(m_hi.tolist()) < phi2:
        raise PK4Violated(f"grid mass above b {math.fsum(m_hi.tolist()):.6g} < phi2 = {phi2:.6g}")

    ld_lo = likelihood_ff(x_lo, x_lo, n)
    l0_lo = likelihood_ff(x_lo, np.zeros_like(x_lo), n)
    ld_hi = likelihood_ff(x_hi, x_hi, n)
    l1_hi = likelihood_ff(x_hi, np.ones_like(x_hi), n)

    search = _contiguous_fills if contiguous else _vertex_fills
    # B changes by t.(L0 - Ld): make it as small as possible.
    t_lo, c1 = _best(search(m_lo, phi1), l0_lo - ld_lo, +1.0) if phi1 > 0 else (np.zeros_like(m_lo), 1)
    # A changes by t.(L1 - Ld): make it as large as possible.
    t_hi, c2 = _best(search(m_hi, phi2), l1_hi - ld_hi, -1.0) if phi2 > 0 else (np.zeros_like(m_hi), 1)

    atoms = []
    for x, m, t in zip(x_lo, m_lo, t_lo):
        if t > 0:
            atoms.append((x, 0.0, t))
        if m - t > 0:
            atoms.append((x, x, m - t))
    for x, m, t in zip(x_hi, m_hi, t_hi):
        if t > 0:
            atoms.append((x, 1.0, t))
        if m - t > 0:
            atoms.append((x, x, m - t))
    arr = np.array(atoms)
    arr[:, 2] /= math.fsum(arr[:, 2].tolist())
    witness = DiscreteJointPrior(arr[:, 0], arr[:, 1], arr[:, 2])
    return GridResult(posterior_for_joint_prior(witness, b, n), witness, c1 * c2)


def mc_likelihood(p: KlotzParams, n: int, runs: int, seed: int, *,
                  batch: int = 200_000) -> tuple[float, float]:
    """Fraction of simulated chains with no failure, and its standard error.

    Batches draw from independent child streams of one seed, so the result
    depends only on ``seed``, ``runs`` and ``batch``.
    """
    if runs < 1000:
        raise DomainError(f"runs={runs!r}; need at least 1000 for a usable estimate")
    sizes = [batch] * (runs // batch) + ([runs % batch] if runs % batch else [])
    streams = np.random.SeedSequence(int(seed)).spawn(len(sizes))
    clean = 0
    for size, ss in zip(sizes, streams):
        chains = simulate_chains(p, n, size, ss)
        clean += int(np.count_nonzero(~chains.any(axis=1)))
    est = clean / runs
    return est, math.sqrt(est * (1.0 - est) / runs)


def beta_conjugate_posterior(alpha: float, beta: float, b: float, n: int, *,
                             dps: int = 30) -> float:
    """``I_b(alpha, beta + n)``, the posterior ``P(X <= b)`` for a Beta prior."""
    if n < 0:
        raise DomainError(f"n={n!r} must be non-negative")
    with mpmath.workdps(dps):
        return float(mpmath.betainc(alpha, beta + n, 0, b, regularized=True))
