import numpy as np
import pytest

from qhom import (DirichletNatural, InvalidSample, SolverConfig, TwoDirichlet,
                  build_homogenized, check_nondegenerate, oscillation_gap,
                  rate_fit, registry_get, solve_homogenized,
                  solve_two_dirichlet, sufficient_condition)
from qhom.bvp import HOMOGENIZED


class TestRateFit:
    def test_recovers_slope_one(self):
        fit = rate_fit([(0.1, 0.3), (0.05, 0.15), (0.025, 0.075)])
        assert fit.p == pytest.approx(1.0, abs=1e-12)
        assert fit.C == pytest.approx(3.0, abs=1e-12)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)

    def test_recovers_slope_two(self):
        eps = [2.0 ** -k for k in range(2, 7)]
        fit = rate_fit([(e, e * e) for e in eps])
        assert fit.p == pytest.approx(2.0, abs=1e-12)
        assert fit.C == pytest.approx(1.0, abs=1e-12)

    def test_rejects_bad_samples(self):
        with pytest.raises(InvalidSample):
            rate_fit([(0.1, 1.0), (0.05, 0.5)])
        with pytest.raises(InvalidSample):
            rate_fit([(0.1, 1.0), (0.05, 0.0), (0.025, 0.1)])
        with pytest.raises(InvalidSample):
            rate_fit([(0.05, 1.0), (0.1, 0.5), (0.025, 0.2)])


def _homogenized_state(name, bc, N=64):
    P = registry_get(name)
    H = build_homogenized(P)
    if isinstance(bc, TwoDirichlet):
        rep = solve_two_dirichlet(P, HOMOGENIZED, SolverConfig(N=N), coeffs=H)
    else:
        rep = solve_homogenized(P, bc, SolverConfig(N=N), coeffs=H)
    return P, H, rep


class TestNondegeneracy:
    def test_linear_sin_passes(self):
        P, H, rep = _homogenized_state("linear-sin", DirichletNatural(np.zeros(1)))
        sigma, ok = check_nondegenerate(P, H, rep.u, rep.v, DirichletNatural(np.zeros(1)))
        assert ok and sigma > 1e-2

    def test_quasilinear_passes(self):
        bc = DirichletNatural(np.zeros(1))
        P, H, rep = _homogenized_state("quasilinear-demo", bc)
        sigma, ok = check_nondegenerate(P, H, rep.u, rep.v, bc)
        assert ok and sigma > 1e-2

    def test_planted_kernel_fails_and_sigma_collapses(self):
        # a0 = p, f0 = -pi^2 u with two Dirichlet conditions: the linearized
        # problem has the kernel sin(pi x)
        bc = TwoDirichlet()
        P, H, rep = _homogenized_state("degenerate-fixture", bc)
        sigmas = []
        for N in (32, 64):
            sigma, ok = check_nondegenerate(P, H, rep.u, rep.v, bc, N=N)
            assert not ok
            sigmas.append(sigma)
        assert sigmas[1] < 0.5 * sigmas[0]

    def test_sigma_stable_under_refinement_for_regular_problem(self):
        bc = DirichletNatural(np.zeros(1))
        P, H, rep = _homogenized_state("linear-sin", bc)
        s1, _ = check_nondegenerate(P, H, rep.u, rep.v, bc, N=32)
        s2, _ = check_nondegenerate(P, H, rep.u, rep.v, bc, N=64)
        assert abs(s2 - s1) < 0.2 * s1


class TestSufficientCondition:
    def test_slope_feedback_variant_holds(self):
        bc = DirichletNatural(np.zeros(1))
        P, H, rep = _homogenized_state("quasilinear-demo-up", bc)
        assert sufficient_condition(P, H, rep.u, rep.v) is True

    def test_plain_quasilinear_fails_flat_reaction(self):
        # df0_dp = 0 here, so the explicit criterion cannot hold even though
        # the solution is nondegenerate
        bc = DirichletNatural(np.zeros(1))
        P, H, rep = _homogenized_state("quasilinear-demo", bc)
        assert sufficient_condition(P, H, rep.u, rep.v) is False

    def test_zero_reaction_fails(self):
        bc = TwoDirichlet()
        P, H, rep = _homogenized_state("degenerate-fixture", bc)
        assert sufficient_condition(P, H, rep.u, rep.v) is False

    def test_recorded_result_for_weakly_coupled_system(self):
        # df0_dp ~ 0.1 A0^-1 is dominated by ||df0_du|| = 1 here
        bc = DirichletNatural(np.zeros(2))
        P, H, rep = _homogenized_state("linear-system-2d", bc)
        assert sufficient_condition(P, H, rep.u, rep.v) is False


class TestOscillationGap:
    def test_y_independent_integrand_vanishes(self):
        g = lambda x, y: np.cos(np.pi * x) * np.ones_like(np.asarray(y, dtype=float))
        lhs, bound = oscillation_gap(g, None, 0.125, 0.7)
        assert lhs <= 1e-10
        assert bound > 0.0

    def test_pure_oscillation_with_commensurate_eps(self):
        # eps = 1/10 divides [0, 1]: the oscillatory integral cancels exactly
        g = lambda x, y: np.sin(2.0 * np.pi * y) * np.ones_like(np.asarray(x, dtype=float))
        lhs, bound = oscillation_gap(g, None, 0.1, 1.0)
        assert lhs <= 1e-10
        assert bound == pytest.approx(0.2, rel=0.05)

    def test_linear_envelope_against_antiderivative(self):
        g = lambda x, y: np.asarray(x, dtype=float) * np.sin(2.0 * np.pi * y)
        dg = lambda x, y: np.sin(2.0 * np.pi * y) * np.ones_like(np.asarray(x, dtype=float))
        eps = 2.0 ** -0.5
        lhs, bound = oscillation_gap(g, dg, eps, 1.0)
        w = 2.0 * np.pi / eps
        exact = abs(np.sin(w) / w ** 2 - np.cos(w) / w)
        assert lhs == pytest.approx(exact, rel=1e-4)
        assert lhs <= bound * (1.0 + 1e-3)
        assert bound == pytest.approx(4.0 * eps, rel=0.05)

    @pytest.mark.parametrize("eps", [2.0 ** -k for k in range(2, 9)])
    def test_randomized_smooth_suite(self, eps):
        rng = np.random.default_rng(int(1.0 / eps))
        for _ in range(15):
            g, dg = _random_trig(rng)
            x = float(rng.uniform(0.3, 1.0))
            use_dx = rng.uniform() < 0.5
            lhs, bound = oscillation_gap(g, dg if use_dx else None, eps, x)
            assert lhs <= bound * (1.0 + 1e-3)


def _random_trig(rng):
    """Random smooth map (x, y) -> R, trig polynomial and 1-periodic in y."""
    ax = rng.normal(size=3)
    ay = rng.normal(size=(3, 2))
    ks = np.array([1.0, 2.0, 3.0])

    def g(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = 0.0
        for i, k in enumerate(ks):
            envelope = np.cos(k * np.pi * x + ax[i])
            out = out + envelope * (ay[i, 0] * np.cos(2.0 * np.pi * k * y)
                                    + ay[i, 1] * np.sin(2.0 * np.pi * k * y))
        return out

    def dg(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = 0.0
        for i, k in enumerate(ks):
            envelope = -k * np.pi * np.sin(k * np.pi * x + ax[i])
            out = out + envelope * (ay[i, 0] * np.cos(2.0 * np.pi * k * y)
                                    + ay[i, 1] * np.sin(2.0 * np.pi * k * y))
        return out

    return g, dg
