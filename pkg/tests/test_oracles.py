import numpy as np
import pytest

from klotzcbi.engine import AssessmentProblem, conservative_confidence, iid_posterior
from klotzcbi.errors import DomainError, PK4Violated
from klotzcbi.klotz import KlotzParams, likelihood_ff
from klotzcbi.oracles import (GridSpec, beta_conjugate_posterior, grid_infimum,
                              mc_likelihood)
from klotzcbi.priors import REFERENCE_PRIORS, BetaPrior

PRIOR = BetaPrior(2, 5)
B, N, PHI = 0.2, 20, 0.1


@pytest.fixture(scope="module")
def analytic():
    return conservative_confidence(AssessmentProblem(B, N, PRIOR, PHI, PHI)).conservative_confidence


class TestGrid:
    def test_converges_to_analytic(self, analytic):
        gaps = [grid_infimum(PRIOR, B, N, PHI, PHI, GridSpec(k)).confidence - analytic
                for k in (100, 200, 400)]
        # Grid priors are feasible, so they never beat the infimum.
        assert all(g >= -1e-12 for g in gaps)
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] / analytic < 0.02

    def test_contiguous_search_is_exhaustive(self):
        fast = grid_infimum(PRIOR, B, N, PHI, PHI, GridSpec(20))
        full = grid_infimum(PRIOR, B, N, PHI, PHI, GridSpec(20), contiguous=False)
        assert full.candidates > fast.candidates
        assert fast.confidence == pytest.approx(full.confidence, rel=1e-12)

    def test_zero_doubt_approaches_iid(self):
        iid = iid_posterior(PRIOR, B, N)
        errs = [abs(grid_infimum(PRIOR, B, N, 0.0, 0.0, GridSpec(k)).confidence - iid)
                for k in (100, 400)]
        assert errs[1] < errs[0] < 1e-2

    def test_witness_is_valid_prior(self):
        res = grid_infimum(PRIOR, B, N, PHI, PHI, GridSpec(50))
        w = res.witness
        assert w.mass.sum() == pytest.approx(1.0, abs=1e-12)
        assert w.prob((w.lam == 0) & (w.x < B)) == pytest.approx(PHI, rel=1e-9)
        assert w.prob((w.lam == 1) & (w.x > B)) == pytest.approx(PHI, rel=1e-9)

    def test_infeasible(self):
        with pytest.raises(PK4Violated):
            grid_infimum(PRIOR, B, N, 0.9, 0.0, GridSpec(20))

    def test_bad_grid(self):
        with pytest.raises(DomainError):
            GridSpec(1)


LATTICE = [(x, lam) for x in (0.05, 0.2, 0.4) for lam in (0.0, 0.5, 1.0)]


class TestMonteCarlo:
    @pytest.mark.parametrize("n", [2, 5, 10])
    @pytest.mark.parametrize("x,lam", LATTICE)
    def test_matches_closed_form(self, x, lam, n):
        est, se = mc_likelihood(KlotzParams(x, lam), n, 20_000, seed=7)
        exact = float(likelihood_ff(x, lam, n))
        assert abs(est - exact) <= 3 * se + 1e-3

    def test_reproducible(self):
        p = KlotzParams(0.3, 0.8)
        assert mc_likelihood(p, 5, 5000, seed=1) == mc_likelihood(p, 5, 5000, seed=1)
        assert mc_likelihood(p, 5, 5000, seed=1) != mc_likelihood(p, 5, 5000, seed=2)

    def test_too_few_runs(self):
        with pytest.raises(DomainError):
            mc_likelihood(KlotzParams(0.3, 0.8), 5, 10, seed=1)


class TestConjugate:
    @pytest.mark.parametrize("prior", REFERENCE_PRIORS)
    @pytest.mark.parametrize("n", [0, 1, 10**3, 10**5])
    def test_matches_engine(self, prior, n):
        ref = beta_conjugate_posterior(prior.alpha, prior.beta, 1e-4, n)
        assert iid_posterior(prior, 1e-4, n) == pytest.approx(ref, rel=1e-8)

    def test_whole_interval(self):
        assert beta_conjugate_posterior(2, 5, 1.0, 10) == 1.0

    def test_negative_n(self):
        with pytest.raises(DomainError):
            beta_conjugate_posterior(2, 5, 0.1, -1)
