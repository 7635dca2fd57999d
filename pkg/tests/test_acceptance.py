"""The ten acceptance criteria, each reported as one PASS/FAIL line."""

import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from klotzcbi.cutpoints import solve_cutpoints
from klotzcbi.engine import (AssessmentProblem, asymptotic_q_bounds, compute_q,
                             conservative_confidence, iid_posterior)
from klotzcbi.klotz import KlotzParams, likelihood_ff
from klotzcbi.oracles import GridSpec, grid_infimum, mc_likelihood
from klotzcbi.priors import REFERENCE_PRIORS, BetaPrior

B = 1e-4
B1 = BetaPrior(1, 10000)


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def conf(n, phi1, phi2, prior=B1):
    return conservative_confidence(AssessmentProblem(B, n, prior, phi1, phi2)).conservative_confidence


def test_01_reference_priors():
    expected = (0.6, 0.63, 0.83)
    got = [p.cdf(B) for p in REFERENCE_PRIORS]
    ok = all(abs(g - e) <= 0.01 for g, e in zip(got, expected))
    report(1, "reference prior confidence", ok, ", ".join(f"{g:.4f}" for g in got))


def test_02_zero_doubt():
    worst = 0.0
    for prior in REFERENCE_PRIORS:
        for n in (10**2, 10**4):
            res = conservative_confidence(AssessmentProblem(B, n, prior))
            worst = max(worst, abs(res.conservative_confidence - iid_posterior(prior, B, n)))
    report(2, "zero doubt equals iid", worst <= 1e-9, f"max abs diff {worst:.2e}")


def test_03_conjugacy():
    got = iid_posterior(B1, B, 10**4)
    ref = 1 - (1 - B) ** 20000
    rel = abs(got - ref) / ref
    report(3, "conjugate posterior", rel <= 1e-6, f"{got!r} vs {ref!r}, rel {rel:.2e}")


def test_04_grid_oracle():
    prior = BetaPrior(2, 5)
    analytic = conservative_confidence(AssessmentProblem(0.2, 20, prior, 0.1, 0.1)).conservative_confidence
    gaps = [abs(grid_infimum(prior, 0.2, 20, 0.1, 0.1, GridSpec(k)).confidence - analytic) / analytic
            for k in (100, 200, 400)]
    ok = gaps[2] <= 0.02 and gaps[0] > gaps[1] > gaps[2]
    report(4, "grid oracle", ok, f"analytic {analytic:.6f}, rel gaps 100/200/400 strips "
           + "/".join(f"{g:.1e}" for g in gaps))


def test_05_cutpoint_certificates():
    sols = [solve_cutpoints(B1, n, B, 0.05, 0.05) for n in (10**3, 10**4, 10**5, 10**6)]
    mass = max(max(s.mass_residual_low, s.mass_residual_high) for s in sols)
    grel = max(max(s.g_residual_low, s.g_residual_high) for s in sols)
    cols = np.array([s.values for s in sols])
    mono = bool(np.all(np.diff(cols, axis=0) <= 0))
    ok = mass <= 1e-10 and grel <= 1e-10 and mono
    report(5, "cut-point certificates", ok,
           f"mass residual {mass:.1e}, g residual {grel:.1e}, non-increasing {mono}")


def test_06_rise_then_fall():
    ns = np.unique(np.round(np.logspace(2, 7, 26)).astype(int))
    doubt = np.array([conf(int(n), 0.05, 0.05) for n in ns])
    peak = int(np.argmax(doubt))
    falls = 0 < peak < len(ns) - 1 and doubt[-1] < doubt[peak]
    certain = np.array([conf(int(n), 0.05, 0.0) for n in ns])
    grows = bool(np.all(np.diff(certain) >= -1e-12)) and certain[-1] > 0.999
    report(6, "rise then fall", falls and grows,
           f"peak {doubt[peak]:.4f} at n={ns[peak]}, conf(1e7)={doubt[-1]:.4f}; "
           f"phi2=0 non-decreasing to {certain[-1]:.6f}")


def test_07_phi1_insensitivity():
    base = conf(10**4, 0.0, 0.05)
    dev = max(abs(conf(10**4, f, 0.05) - base) for f in (0.05, 0.1, 0.2, 0.3))
    report(7, "phi1 insensitivity", dev <= 0.05, f"max deviation {dev:.2e}")


def test_08_classical_pessimism():
    x = np.nextafter(B, 1.0)
    vals = [float(likelihood_ff(x, 1.0, n)) for n in (10**2, 10**6)]
    ok = all(v == pytest.approx(1 - x, rel=1e-15) and v >= 0.9998 for v in vals)
    report(8, "classical pessimism", ok, ", ".join(repr(v) for v in vals))


def test_09_monte_carlo():
    est, se = mc_likelihood(KlotzParams(0.3, 0.8), 5, 10**6, seed=2024)
    dev = abs(est - 0.48913)
    report(9, "Monte Carlo likelihood", dev <= 3 * se, f"{est:.5f} +/- {se:.1e}, |dev| {dev:.1e}")


def test_10_jensen_bounds():
    details, ok = [], True
    for n in (10**4, 10**6):
        pr = AssessmentProblem(B, n, B1, 0.05, 0.0)
        qb = asymptotic_q_bounds(pr)
        log_q = compute_q(pr).log_q
        inside = qb.log_lower <= log_q <= qb.log_upper and qb.lower >= 0
        ok &= inside
        details.append(f"n={n}: {qb.lower:.3g} <= {math.exp(log_q):.3g} <= {qb.upper:.3g}")
    ok &= asymptotic_q_bounds(AssessmentProblem(B, 10**6, B1, 0.05, 0.0)).upper < 1e-3
    report(10, "Jensen bounds", ok, "; ".join(details))
