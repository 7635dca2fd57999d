"""The Klotz model: a stationary two-state Markov chain of Bernoulli trials.

A chain is described by its pfd ``x`` (marginal failure probability) and its
dependence ``lam`` (probability that a failure follows a failure).
Stationarity fixes the remaining transition,

    P(fail | previous success) = (1 - lam) * x / (1 - x),

and the transitions are valid probabilities exactly on the region

    0 <= x < 1,   max(0, (2x - 1) / x) <= lam <= 1.

``lam == x`` is the i.i.d. case, ``lam > x`` clusters outcomes and
``lam < x`` makes them alternate.

Outcomes are coded 0 for success and 1 for failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import RegionError

__all__ = [
    "KlotzParams",
    "Transitions",
    "ChainOutcome",
    "in_region",
    "lambda_lower_bound",
    "transition_probs",
    "likelihood_ff",
    "log_likelihood_ff",
    "simulate_chain",
    "simulate_chains",
]

# Slack for the region test; lam_min is computed with one rounding.
_REGION_SLACK = 1e-15


def lambda_lower_bound(x):
    """Smallest feasible dependence for pfd ``x`` (0 when ``x <= 1/2``)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lb = np.where(x > 0.5, (2.0 * x - 1.0) / np.where(x > 0.5, x, 1.0), 0.0)
    return lb if lb.ndim else float(lb)


def in_region(x, lam) -> bool | np.ndarray:
    """True where ``(x, lam)`` is a feasible Klotz parameter pair."""
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    ok = (x >= 0) & (x < 1) & (lam <= 1) & (lam >= lambda_lower_bound(x) - _REGION_SLACK)
    return bool(ok) if ok.ndim == 0 else ok


@dataclass(frozen=True)
class KlotzParams:
    """A point ``(x, lam)`` of the feasible region."""

    x: float
    lam: float

    def __post_init__(self):
        if not in_region(self.x, self.lam):
            raise RegionError(f"(x={self.x!r}, lambda={self.lam!r}) is outside the Klotz region")

    @property
    def is_iid(self) -> bool:
        return self.x == self.lam

    def transitions(self) -> "Transitions":
        return transition_probs(self)

    def likelihood(self, n: int) -> float:
        return float(likelihood_ff(self.x, self.lam, n))

    def log_likelihood(self, n: int) -> float:
        return float(log_likelihood_ff(self.x, self.lam, n))


class Transitions(NamedTuple):
    """One-step transition probabilities, ``P(next | previous)``."""

    fail_after_fail: float
    success_after_fail: float
    fail_after_success: float
    success_after_success: float


def _fail_after_success(x, lam):
    return (1.0 - lam) * x / (1.0 - x)


def transition_probs(p: KlotzParams) -> Transitions:
    q = min(1.0, _fail_after_success(p.x, p.lam))
    return Transitions(p.lam, 1.0 - p.lam, q, 1.0 - q)


def _check_n(n) -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return int(n)


def _prepare(x, lam, n):
    n = _check_n(n)
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    corner = (x == 1.0) & (lam == 1.0)
    if not np.all(in_region(x, lam) | corner):
        raise RegionError("(x, lambda) outside the Klotz region")
    return n, np.where(corner, 0.0, x), lam, corner


def _log_tail(xs, lam, n):
    """``(n - 1) log(1 - P(fail | success))``, the run of successes after the first."""
    if n == 1:
        return np.zeros(np.broadcast(xs, lam).shape)
    q = np.minimum(1.0, _fail_after_success(xs, lam))
    with np.errstate(divide="ignore", invalid="ignore"):
        return (n - 1) * np.log1p(-q)


def log_likelihood_ff(x, lam, n: int):
    """Log-probability that ``n`` consecutive demands all succeed.

    Vectorised over ``x`` and ``lam``.  Returns ``-inf`` where the
    likelihood is zero, including the limit point ``(1, 1)``.
    """
    n, xs, lam, corner = _prepare(x, lam, n)
    with np.errstate(divide="ignore"):
        out = np.log1p(-xs) + _log_tail(xs, lam, n)
    out = np.where(corner, -np.inf, out)
    return out if out.ndim else float(out)


def likelihood_ff(x, lam, n: int):
    """Probability of ``n`` failure-free demands:
    ``(1 - x) * (1 - (1 - lam) x / (1 - x)) ** (n - 1)``.

    The leading ``1 - x`` stays in linear space, so ``lam == 1`` gives
    exactly ``1 - x``.
    """
    n, xs, lam, corner = _prepare(x, lam, n)
    out = np.where(corner, 0.0, (1.0 - xs) * np.exp(_log_tail(xs, lam, n)))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ChainOutcome:
    trials: np.ndarray
    seed: int

    def __len__(self) -> int:
        return int(self.trials.size)

    def to_line(self) -> str:
        """Compact ``0``/``1`` text form."""
        return self.trials.astype(np.uint8).tobytes().translate(bytes.maketrans(b"\x00\x01", b"01")).decode()

    @property
    def failure_fraction(self) -> float:
        return float(self.trials.mean()) if self.trials.size else 0.0


def _rng(seed) -> np.random.Generator:
    # Philox is counter based, so independent streams come from seed spawning.
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def simulate_chain(p: KlotzParams, n: int, seed: int) -> ChainOutcome:
    """Draw one chain of ``n`` trials.

    ``T1`` comes from the stationary marginal.  The chain is then built from
    alternating sojourns whose lengths are geometric, which avoids a Python
    loop over ``n``.
    """
    if not isinstance(p, KlotzParams):
        raise TypeError("p must be KlotzParams")
    n = int(n)
    rng = _rng(seed)
    t = transition_probs(p)
    leave = {0: t.fail_after_success, 1: t.success_after_fail}
    state = int(rng.random() < p.x)
    block = 1024
    values = np.tile(np.array([state, 1 - state], dtype=np.int8), block)
    chunks = []
    pos = 0
    while pos < n:
        # Even slots are sojourns in `state`, odd slots in the other state;
        # an even count per block keeps the phase for the next block.
        lengths = np.empty(2 * block, dtype=np.int64)
        for k, s in enumerate((state, 1 - state)):
            q = leave[s]
            lengths[k::2] = n if q <= 0.0 else rng.geometric(q, size=block)
        ends = np.minimum(pos + np.cumsum(lengths), n)
        counts = np.diff(np.concatenate([[pos], ends]))
        chunks.append(np.repeat(values, counts))
        pos = int(ends[-1])
    out = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int8)
    return ChainOutcome(out[:n], int(seed))


def simulate_chains(p: KlotzParams, n: int, runs: int, seed) -> np.ndarray:
    """``runs`` independent chains of length ``n`` as an int8 array ``(runs, n)``.

    Steps all chains together, one trial at a time; meant for short chains.
    """
    n, runs = int(n), int(runs)
    rng = _rng(seed)
    t = transition_probs(p)
    out = np.empty((runs, n), dtype=np.int8)
    state = rng.random(runs) < p.x
    out[:, 0] = state
    for i in range(1, n):
        u = rng.random(runs)
        state = np.where(state, u < t.fail_after_fail, u < t.fail_after_success)
        out[:, i] = state
    return out
