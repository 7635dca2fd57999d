import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from klotzcbi.cutpoints import (DEFAULT_EPS, classify_case, solve_cutpoints,
                                solve_lower_cutpoints, solve_upper_cutpoints)
from klotzcbi.errors import NonConvergence, PK4Violated
from klotzcbi.gfunctions import GFunctions
from klotzcbi.priors import BetaPrior, PiecewisePrior

UNIFORM = BetaPrior(1, 1)
B1 = BetaPrior(1, 10000)
DEMAND_COUNTS = (10**3, 10**4, 10**5, 10**6)


def check_invariants(prior, b, phi1, phi2, cp, eps=DEFAULT_EPS):
    assert 0.0 <= cp.c1_low <= cp.c2_low <= b <= cp.c1_high <= cp.c2_high <= 1.0
    assert abs(prior.mass(cp.c1_low, cp.c2_low) - phi1) <= eps
    assert abs(prior.mass(cp.c1_high, cp.c2_high) - phi2) <= eps
    assert cp.max_residual <= eps


class TestSmallCases:
    def test_uniform_n2(self):
        cp = solve_cutpoints(UNIFORM, 2, 0.4, 0.1, 0.1)
        assert cp.values == pytest.approx((0.3, 0.4, 0.45, 0.55), abs=1e-12)
        assert cp.case_id == 4
        assert not cp.interior_low and cp.interior_high

    def test_zero_doubts_collapse_to_b(self):
        cp = solve_cutpoints(B1, 10**4, 1e-4, 0.0, 0.0)
        assert cp.values == (1e-4,) * 4

    def test_interior_lower_at_1e4(self):
        g = GFunctions(10**5)
        low = solve_lower_cutpoints(B1, g, 1e-4, 0.05)
        assert low.interior
        assert abs(g.g_lower(low.left) - g.g_lower(low.right)) <= 1e-10
        assert abs(B1.mass(low.left, low.right) - 0.05) <= 1e-10

    def test_interior_upper_at_1e4(self):
        g = GFunctions(10**4)
        assert g.argmax_g_upper == pytest.approx(9.2e-4, rel=1e-3)
        high = solve_upper_cutpoints(B1, g, 1e-4, 0.05)
        assert high.interior
        assert abs(g.g_upper(high.left) - g.g_upper(high.right)) <= 1e-10
        assert abs(B1.mass(high.left, high.right) - 0.05) <= 1e-10


class TestCases:
    def test_both_peaks_above_b(self):
        assert classify_case(GFunctions(2), 0.4) == 4
        assert classify_case(GFunctions(10**4), 1e-4) == 4

    def test_split_peaks(self):
        assert classify_case(GFunctions(10**5), 1e-4) == 2

    def test_both_peaks_below_b(self):
        assert classify_case(GFunctions(10**6), 1e-4) == 1

    def test_tie_goes_to_pinned_side(self):
        g = GFunctions(1000)
        assert classify_case(g, g.argmax_g_upper) in (1, 3)
        assert classify_case(g, g.argmax_g_lower) in (3, 4)
        high = solve_upper_cutpoints(UNIFORM, g, g.argmax_g_upper, 0.1)
        assert high.left == g.argmax_g_upper

    def test_lower_peak_never_right_of_upper(self):
        # Case 3 needs x_l >= b >= x_u; equality holds only at n = 2, at 1/2 > b.
        for n in (2, 3, 10, 100, 10**4, 10**7):
            g = GFunctions(n)
            assert g.argmax_g_lower <= g.argmax_g_upper


class TestErrors:
    def test_pk4_low(self):
        with pytest.raises(PK4Violated, match="PK4 violated"):
            solve_cutpoints(BetaPrior(2, 20000), 100, 1e-4, 0.7, 0.0)

    def test_pk4_high(self):
        with pytest.raises(PK4Violated, match="PK4 violated"):
            solve_cutpoints(BetaPrior(2, 20000), 100, 1e-4, 0.0, 0.5)

    def test_boundary_equality_allowed(self):
        below = UNIFORM.cdf(0.3)
        cp = solve_cutpoints(UNIFORM, 10, 0.3, below, 1 - below)
        assert cp.c1_low == 0.0 and cp.c2_high == 1.0

    def test_unreachable_tolerance(self):
        with pytest.raises(NonConvergence) as info:
            solve_cutpoints(B1, 10**4, 1e-4, 0.05, 0.05, eps=0.0)
        assert info.value.iterations >= 200


class TestReferenceSetting:
    @pytest.mark.parametrize("n", DEMAND_COUNTS + (10**2, 10**7))
    def test_certificates(self, n):
        cp = solve_cutpoints(B1, n, 1e-4, 0.05, 0.05)
        check_invariants(B1, 1e-4, 0.05, 0.05, cp)
        assert cp.g_residual_low <= 1e-10 and cp.g_residual_high <= 1e-10

    def test_non_increasing_in_n(self):
        rows = [solve_cutpoints(B1, n, 1e-4, 0.05, 0.05).values for n in DEMAND_COUNTS]
        for earlier, later in zip(rows, rows[1:]):
            assert all(b <= a for a, b in zip(earlier, later))

    @pytest.mark.parametrize("n", DEMAND_COUNTS)
    def test_idempotent_under_tighter_eps(self, n):
        a = solve_cutpoints(B1, n, 1e-4, 0.05, 0.05, eps=1e-10)
        b = solve_cutpoints(B1, n, 1e-4, 0.05, 0.05, eps=1e-11)
        for u, v in zip(a.values, b.values):
            assert abs(B1.cdf(u) - B1.cdf(v)) < 1e-9

    def test_vanishing_doubt_collapses_intervals(self):
        widths = []
        for phi in (1e-2, 1e-4, 1e-6):
            cp = solve_cutpoints(B1, 10**5, 1e-4, phi, phi)
            widths.append((cp.c2_low - cp.c1_low, cp.c2_high - cp.c1_high))
        for earlier, later in zip(widths, widths[1:]):
            assert later[0] < earlier[0] and later[1] < earlier[1]
        assert widths[-1][0] < 1e-8 and widths[-1][1] < 1e-8


PRIORS = (BetaPrior(2, 20000), B1, BetaPrior(0.1, 1000), BetaPrior(2, 5), UNIFORM,
          PiecewisePrior.from_function(lambda x: np.interp(x, (0, 0.05, 0.3, 1), (0, 10, 1.5, 0)),
                                       (0.0, 0.05, 0.3, 1.0)))


class TestProperties:
    @settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(i=st.integers(0, len(PRIORS) - 1), n=st.integers(2, 10**7),
           b=st.floats(1e-5, 0.45), f1=st.floats(0, 1), f2=st.floats(0, 1))
    def test_invariants(self, i, n, b, f1, f2):
        prior = PRIORS[i]
        below = prior.cdf(b)
        phi1, phi2 = f1 * below, f2 * prior.sf(b)
        cp = solve_cutpoints(prior, n, b, phi1, phi2)
        check_invariants(prior, b, phi1, phi2, cp)
