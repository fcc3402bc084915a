import math

import numpy as np
import pytest

from fpforge import (
    CertificateRequired,
    EllipticProblem,
    gamma_estimate,
    laplacian_inverse,
    mu_star,
    radius_power,
    solve_elliptic,
)
from fpforge.elliptic import GAMMA_SAFETY, lambda1, weighted_norm
from fpforge.errors import InvalidProblem


def make_prob(n=100, lam=0.0, mu=0.0, p=4.0, q=1.5, a=0.0, h=None):
    if h is None:
        h = np.zeros(n)
    return EllipticProblem(n_interior=n, lam=lam, mu=mu, p_exp=p, q_exp=q, a_coef=a, h_data=h)


def sine_forcing(n, eps=1.0, mode=1):
    x = np.arange(1, n + 1) / (n + 1)
    return eps * np.sin(mode * math.pi * x)


class TestLaplacianInverse:
    def test_zero_maps_to_zero(self):
        prob = make_prob(50)
        assert np.all(laplacian_inverse(prob, np.zeros(50)) == 0.0)

    def test_discrete_sine_eigenvector(self):
        n = 64
        prob = make_prob(n)
        h = prob.h
        for mode in (1, 3):
            v = sine_forcing(n, mode=mode)
            lam_k = 2.0 * (1.0 - math.cos(mode * math.pi * h)) / (h * h)
            assert np.allclose(laplacian_inverse(prob, v), v / lam_k, atol=1e-12)

    def test_round_trip_is_identity(self, rng):
        n = 80
        prob = make_prob(n)
        w = rng.standard_normal(n)
        u = laplacian_inverse(prob, w)
        h2 = prob.h**2
        back = (-np.roll(u, -1) + 2 * u - np.roll(u, 1))
        back[0] = 2 * u[0] - u[1]
        back[-1] = 2 * u[-1] - u[-2]
        assert np.allclose(back / h2, w, rtol=1e-10, atol=1e-10)

    def test_parabola_consistency(self):
        # -u'' = 2 with zero boundary has u = x(1 - x).
        n = 1000
        prob = make_prob(n)
        x = prob.x_interior
        u = laplacian_inverse(prob, np.full(n, 2.0))
        assert np.max(np.abs(u - x * (1 - x))) < 1e-4


class TestGammaEstimate:
    def test_l2_case_matches_spectral_value(self):
        prob = make_prob(1000)
        gam = gamma_estimate(prob, 1.0, seed=0)
        assert gam == pytest.approx(1.0 / lambda1(prob), abs=2e-3)
        assert gam == pytest.approx(1.0 / math.pi**2, abs=2e-3)

    def test_witness_is_reproducible(self):
        prob = make_prob(200)
        gam, v = gamma_estimate(prob, 2.0, seed=3, return_witness=True)
        ratio = weighted_norm(prob, laplacian_inverse(prob, v), 4.0) / weighted_norm(prob, v, 2.0)
        assert gam >= ratio - 1e-12

    def test_monotone_in_exponent(self):
        prob = make_prob(300)
        vals = [gamma_estimate(prob, p, seed=7) for p in (1.0, 2.0, 3.0)]
        assert vals[0] <= vals[1] + 1e-10 <= vals[2] + 2e-10

    def test_deterministic_under_seed(self):
        prob = make_prob(150)
        assert gamma_estimate(prob, 2.0, seed=11) == gamma_estimate(prob, 2.0, seed=11)


class TestMuStar:
    def test_pure_power_algebra(self):
        prob = make_prob(60, a=0.0, h=np.zeros(60))
        cert = mu_star(prob, gamma=2.0, radius=3.0)
        assert cert.verdict == "PASS"
        assert cert.margin == pytest.approx(3.0 ** (2 - 4.0) / 2.0 ** (4.0 - 1), rel=1e-12)

    def test_reference_arithmetic_instance(self):
        n = 50
        c = 1.0 / math.sqrt(n / (n + 1.0))  # makes the weighted norm of h exactly 1
        prob = make_prob(n, a=1.0, p=4.0, q=1.5, h=np.full(n, c))
        cert = mu_star(prob, gamma=1.0, radius=9.0)
        assert cert.verdict == "PASS"
        assert cert.margin == pytest.approx(5.0 / 729.0, abs=1e-12)

    def test_small_radius_fails(self):
        n = 40
        prob = make_prob(n, h=np.full(n, 5.0))
        cert = mu_star(prob, gamma=1.0, radius=1.0)
        assert cert.verdict == "FAIL"
        assert cert.margin < 0


class TestSolveElliptic:
    def test_linear_problem_is_direct_solve(self):
        n = 100
        h = sine_forcing(n)
        prob = make_prob(n, h=h)
        rep = solve_elliptic(prob, tol=1e-12)
        assert rep.converged and rep.iterations == 1
        assert np.max(np.abs(rep.final.values[1:-1, 0] - laplacian_inverse(prob, h))) < 1e-10
        assert rep.final.values[0, 0] == 0.0 and rep.final.values[-1, 0] == 0.0

    def test_positive_lambda_against_dense_solve(self):
        n = 120
        h = sine_forcing(n, eps=2.0)
        prob = make_prob(n, lam=lambda1(make_prob(n)) / 2.0, h=h)
        rep = solve_elliptic(prob, tol=1e-12)
        step = 1.0 / (n + 1)
        mat = (np.diag(np.full(n, 2.0 / step**2 + prob.lam))
               + np.diag(np.full(n - 1, -1.0 / step**2), 1)
               + np.diag(np.full(n - 1, -1.0 / step**2), -1))
        direct = np.linalg.solve(mat, h)
        assert np.max(np.abs(rep.final.values[1:-1, 0] - direct)) < 1e-8

    def test_negative_lambda_branch(self):
        n = 120
        h = sine_forcing(n)
        lam = -lambda1(make_prob(n)) / 2.0
        prob = make_prob(n, lam=lam, h=h)
        rep = solve_elliptic(prob, tol=1e-12)
        step = 1.0 / (n + 1)
        mat = (np.diag(np.full(n, 2.0 / step**2 + lam))
               + np.diag(np.full(n - 1, -1.0 / step**2), 1)
               + np.diag(np.full(n - 1, -1.0 / step**2), -1))
        direct = np.linalg.solve(mat, h)
        assert np.max(np.abs(rep.final.values[1:-1, 0] - direct)) < 1e-8

    def test_lambda_below_contraction_limit_rejected(self):
        n = 50
        with pytest.raises(InvalidProblem):
            solve_elliptic(make_prob(n, lam=-1.01 * lambda1(make_prob(n))))

    def test_small_forcing_power_regime_stays_in_ball(self):
        n = 200
        prob = make_prob(n, mu=1.0, p=4.0, h=sine_forcing(n, eps=1e-3))
        gam = gamma_estimate(prob, prob.p_exp - 1.0, seed=0) * GAMMA_SAFETY
        cert = radius_power(gam ** (prob.p_exp - 1.0), prob.p_exp - 1.0)
        rep = solve_elliptic(prob, tol=1e-12)
        w_norm = weighted_norm(prob, rep.extras["w_final"], 2.0)
        assert weighted_norm(prob, prob.h_data, 2.0) <= cert.radius
        assert w_norm <= cert.witness["r_star"]
        assert rep.converged

    def test_certificate_gate(self):
        n = 60
        prob = make_prob(n, mu=5.0, p=4.0, h=sine_forcing(n, eps=0.5))
        gate = mu_star(prob, gamma=1.0, radius=1.0)
        with pytest.raises(CertificateRequired):
            solve_elliptic(prob, certificate=gate)
        # with override the solve proceeds (and may still converge)
        rep = solve_elliptic(prob, certificate=gate, override=True, max_outer=2000)
        assert rep.converged

    def test_residual_is_pde_scale(self):
        n = 100
        prob = make_prob(n, lam=3.0, mu=0.5, p=3.5, h=sine_forcing(n, eps=0.1))
        tol = 1e-11
        rep = solve_elliptic(prob, tol=tol)
        u = rep.final.values[1:-1, 0]
        step = 1.0 / (n + 1)
        lap = (-np.roll(u, -1) + 2 * u - np.roll(u, 1))
        lap[0] = 2 * u[0] - u[1]
        lap[-1] = 2 * u[-1] - u[-2]
        lap /= step**2
        rhs = (prob.mu * np.sign(u) * np.abs(u) ** (prob.p_exp - 1.0)
               + prob.a_coef * np.sign(u) * np.abs(u) ** (prob.q_exp - 1.0) + prob.h_data)
        resid = weighted_norm(prob, lap + prob.lam * u - rhs, 2.0)
        assert resid <= tol * (1 + 1e-6)

    def test_odd_symmetry_of_solutions(self):
        n = 150
        h = sine_forcing(n, eps=0.3, mode=2)
        rep_plus = solve_elliptic(make_prob(n, mu=0.8, h=h), tol=1e-12)
        rep_minus = solve_elliptic(make_prob(n, mu=0.8, h=-h), tol=1e-12)
        assert np.max(np.abs(rep_plus.final.values + rep_minus.final.values)) < 1e-10


class TestPositiveDefiniteness:
    def test_inverse_is_positive_definite(self, rng):
        prob = make_prob(80)
        for _ in range(100):
            w = rng.standard_normal(80)
            assert prob.h * (w @ laplacian_inverse(prob, w)) > 0

    def test_negated_inverse_is_expanding(self, rng):
        # ||u + lam*Linv(u)||^2 = ||u||^2 + 2 lam <u, Linv u> + lam^2 ||Linv u||^2 >= ||u||^2
        prob = make_prob(80)
        for _ in range(100):
            u = rng.standard_normal(80)
            lam = 10.0 ** rng.uniform(-2, 2)
            lhs = weighted_norm(prob, u + lam * laplacian_inverse(prob, u), 2.0) ** 2
            assert lhs >= weighted_norm(prob, u, 2.0) ** 2 - 1e-12


def test_estimate_chain(rng):
    # Substitution-map image norm is controlled by the certified chain.
    n = 150
    prob = make_prob(n, mu=0.7, a=0.4, p=4.0, q=1.5, h=sine_forcing(n, eps=0.2))
    gam = gamma_estimate(prob, prob.p_exp - 1.0, seed=5) * GAMMA_SAFETY
    radius = 2.0
    h2 = weighted_norm(prob, prob.h_data, 2.0)
    bound = (prob.mu * gam ** (prob.p_exp - 1) * radius ** (prob.p_exp - 1)
             + prob.a_coef * gam ** (prob.q_exp - 1) * radius ** (prob.q_exp - 1) + h2)
    for _ in range(1000):
        u = rng.standard_normal(n)
        u *= radius / weighted_norm(prob, u, 2.0) * rng.uniform(0, 1)
        v = laplacian_inverse(prob, u)
        img = (prob.mu * np.sign(v) * np.abs(v) ** (prob.p_exp - 1)
               + prob.a_coef * np.sign(v) * np.abs(v) ** (prob.q_exp - 1) + prob.h_data)
        assert weighted_norm(prob, img, 2.0) <= bound + 1e-8
