import numpy as np
import pytest
from hypothesis import given, strategies as st

from sde_splitkit import linalg, models
from sde_splitkit.models import FhnParams

from oracles import ode_flow


class TestToyFlow:
    def test_fixed_points(self):
        assert models.toy_flow(0.0, 1.0) == 0.0
        for t in (0.0, 0.3, 5.0):
            assert models.toy_flow(1.0, t) == pytest.approx(1.0, rel=1e-14)
            assert models.toy_flow(-1.0, t) == pytest.approx(-1.0, rel=1e-14)

    def test_matches_ode_oracle(self):
        got = models.toy_flow(2.0, 1.0)
        ref = ode_flow(lambda x: x - x**3, 2.0, 1.0)[0]
        assert got == pytest.approx(ref, rel=1e-9)
        assert got == pytest.approx(1.0549729219, rel=1e-9)

    @given(st.floats(-1e306, 1e306, allow_nan=False), st.floats(0.0, 50.0))
    def test_finite_and_sign_preserving(self, x, t):
        out = models.toy_flow(x, t)
        assert np.isfinite(out)
        assert np.sign(out) == np.sign(x)

    def test_monotone_in_x(self):
        xs = np.linspace(-30.0, 30.0, 2001)
        out = models.toy_flow(xs, 0.7)
        assert np.all(np.diff(out) > 0)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            models.toy_flow(1.0, -0.1)

    @given(
        st.floats(-100.0, 100.0),
        st.floats(0.0, 3.0),
        st.floats(0.0, 3.0),
    )
    def test_semigroup(self, x, s, t):
        once = models.toy_flow(x, s + t)
        twice = models.toy_flow(models.toy_flow(x, s), t)
        assert twice == pytest.approx(once, rel=1e-12, abs=1e-300)

    @given(st.floats(-1e6, 1e6), st.floats(1e-9, 1.0))
    def test_quadratic_growth_bound(self, x, delta):
        # |f(x; d)|^2 <= x^2 + d/2
        f = models.toy_flow(x, delta)
        assert f * f <= x * x + 0.5 * delta + 1e-9 * (1.0 + x * x)


class TestFhnFlow:
    P = FhnParams(eps=1.0, gamma=1.0, beta=0.1, sigma1=0.1, sigma2=0.2)

    def test_v_zero_moves_linearly(self):
        out = models.fhn_flow(np.array([0.0, 2.0]), 0.7, self.P)
        assert out[0] == 0.0
        assert out[1] == pytest.approx(2.0 + 0.1 * 0.7, rel=1e-14)

    def test_fixed_point_without_input(self):
        p0 = FhnParams(eps=1.0, gamma=1.0, beta=0.0, sigma1=0.1, sigma2=0.2)
        out = models.fhn_flow(np.array([1.0, 0.0]), 2.0, p0)
        assert np.allclose(out, [1.0, 0.0], rtol=1e-14)

    def test_matches_ode_oracle(self):
        got = models.fhn_flow(np.array([2.0, 0.0]), 1.0, self.P)
        rhs = lambda x: np.array([(x[0] - x[0] ** 3) / self.P.eps, self.P.beta])
        ref = ode_flow(rhs, [2.0, 0.0], 1.0)
        assert np.allclose(got, ref, rtol=1e-9)
        assert got[1] == pytest.approx(0.1, rel=1e-14)

    @given(
        st.floats(-50.0, 50.0),
        st.floats(-50.0, 50.0),
        st.floats(0.0, 2.0),
        st.floats(0.0, 2.0),
    )
    def test_semigroup(self, v, u, s, t):
        x = np.array([v, u])
        once = models.fhn_flow(x, s + t, self.P)
        twice = models.fhn_flow(models.fhn_flow(x, s, self.P), t, self.P)
        assert np.allclose(twice, once, rtol=1e-12, atol=1e-300)

    def test_quadratic_growth_bound_beta_zero(self):
        # |f(x; d)|^2 <= |x|^2 + d/(2 eps) when beta = 0
        p0 = FhnParams(eps=0.05, gamma=1.5, beta=0.0, sigma1=0.0, sigma2=0.2)
        rng = np.random.default_rng(17)
        x = rng.uniform(-1e6, 1e6, size=(20000, 2))
        for delta in (1e-4, 1e-2, 0.5, 1.0):
            f = models.fhn_flow(x, delta, p0)
            lhs = np.einsum("ij,ij->i", f, f)
            rhs = np.einsum("ij,ij->i", x, x) + 0.5 * delta / p0.eps
            assert np.all(lhs <= rhs + 1e-9 * (1.0 + rhs))


class TestKappa:
    def test_critical_by_construction(self):
        assert models.fhn_kappa(FhnParams(eps=1.0, gamma=0.25)) == 0.0

    def test_unit_parameters(self):
        assert models.fhn_kappa(FhnParams(eps=1.0, gamma=1.0)) == 3.0

    def test_paper_parameters(self):
        assert models.fhn_kappa(FhnParams(eps=0.05, gamma=1.5)) == pytest.approx(119.0)


# parameter sets covering all kappa branches
BRANCHES = [
    FhnParams(eps=1.0, gamma=0.25, beta=0.0, sigma1=0.1, sigma2=0.2),   # k = 0
    FhnParams(eps=1.0, gamma=1.0, beta=0.0, sigma1=1.0, sigma2=1.0),    # k = 3
    FhnParams(eps=0.05, gamma=1.5, beta=0.0, sigma1=0.1, sigma2=0.2),   # k = 119
    FhnParams(eps=1.0, gamma=0.1, beta=0.0, sigma1=0.3, sigma2=0.5),    # k < 0
]


class TestFhnMatExp:
    def test_t_zero_identity(self):
        for p in BRANCHES:
            assert np.array_equal(models.fhn_mat_exp(p, 0.0), np.eye(2))

    def test_critical_closed_form(self):
        p = FhnParams(eps=1.0, gamma=0.25)
        expected = np.exp(-0.5) * np.array([[1.5, -1.0], [0.25, 0.5]])
        assert np.allclose(models.fhn_mat_exp(p, 1.0), expected, rtol=1e-14)

    @pytest.mark.parametrize("p", BRANCHES)
    def test_matches_generic_exponential(self, p):
        A = models.fhn_drift_matrix(p)
        for t in (0.01, 0.7, 3.0):
            E = models.fhn_mat_exp(p, t)
            ref = linalg.mat_exp(A, t)
            assert np.abs(E - ref).max() <= 1e-10 * max(np.abs(ref).max(), 1.0)

    def test_continuity_across_branch_switch(self):
        # values for kappa = +/- 2e-8 must agree to 1e-6 relative
        eps = 1.0
        for t in (0.1, 1.0, 5.0):
            vals = []
            for dk in (-2e-8, 2e-8):
                p = FhnParams(eps=eps, gamma=eps * (1.0 + dk) / 4.0)
                vals.append(models.fhn_mat_exp(p, t))
            assert np.abs(vals[0] - vals[1]).max() <= 1e-6 * np.abs(vals[1]).max()

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            models.fhn_mat_exp(BRANCHES[0], -1.0)


class TestFhnCov:
    def test_t_zero(self):
        for p in BRANCHES:
            assert np.array_equal(models.fhn_cov(p, 0.0), np.zeros((2, 2)))

    @pytest.mark.parametrize("p", BRANCHES)
    def test_matches_quadrature(self, p):
        A = models.fhn_drift_matrix(p)
        Sigma = np.diag([p.sigma1, p.sigma2])
        for t in np.geomspace(1e-3, 10.0, 9):
            C = models.fhn_cov(p, t)
            ref = linalg.cov_quadrature(A, Sigma, t, tol=1e-12)
            assert np.abs(C - ref).max() <= 1e-8 * max(np.abs(ref).max(), 1e-300)

    def test_hypoelliptic_small_step_full_rank(self):
        p = FhnParams(eps=0.05, gamma=1.5, sigma1=0.0, sigma2=0.2)
        C = models.fhn_cov(p, 0.01)
        ref = linalg.cov_quadrature(
            models.fhn_drift_matrix(p), np.diag([0.0, 0.2]), 0.01, tol=1e-12
        )
        assert np.abs(C - ref).max() <= 1e-8 * np.abs(ref).max()
        assert np.linalg.det(C) > 0.0

    def test_long_time_limit_is_stationary_covariance(self):
        p = FhnParams(eps=0.05, gamma=20.0, beta=0.0, sigma1=0.1, sigma2=0.2)
        target = models.fhn_stationary_cov(p)
        assert np.abs(models.fhn_cov(p, 50.0) - target).max() <= 1e-12

    def test_stationary_solves_lyapunov_equation(self):
        # A C + C A^T + Sigma Sigma^T = 0 for every branch
        for p in BRANCHES:
            A = models.fhn_drift_matrix(p)
            Q = np.diag([p.sigma1**2, p.sigma2**2])
            C = models.fhn_stationary_cov(p)
            assert np.abs(A @ C + C @ A.T + Q).max() <= 1e-12 * np.abs(Q).max()

    def test_continuity_across_branch_switch(self):
        for t in (0.1, 1.0, 5.0):
            vals = []
            for dk in (-2e-8, 2e-8):
                p = FhnParams(
                    eps=1.0, gamma=(1.0 + dk) / 4.0, sigma1=0.3, sigma2=0.4
                )
                vals.append(models.fhn_cov(p, t))
            assert np.abs(vals[0] - vals[1]).max() <= 1e-6 * np.abs(vals[1]).max()


class TestBuildModel:
    def test_toy_assembly(self):
        m = models.build_model("toy", sigma=0.5)
        assert (m.d, m.m) == (1, 1)
        assert np.array_equal(m.A, [[-1.0]])
        assert m.nonlinear_drift(np.array([2.0]))[0] == pytest.approx(2.0 - 8.0)
        assert m.full_drift(np.array([2.0]))[0] == pytest.approx(-8.0)

    def test_fhn_assembly(self):
        m = models.build_model(
            "fhn", eps=0.05, gamma=1.5, beta=0.1, sigma1=0.1, sigma2=0.2
        )
        assert (m.d, m.m) == (2, 2)
        assert np.array_equal(m.A, [[0.0, -20.0], [1.5, -1.0]])
        assert np.array_equal(m.Sigma, np.diag([0.1, 0.2]))

    def test_full_drift_is_sum_of_parts(self):
        m = models.build_model(
            "fhn", eps=0.05, gamma=1.5, beta=0.1, sigma1=0.1, sigma2=0.2
        )
        rng = np.random.default_rng(0)
        x = rng.uniform(-5, 5, size=(100, 2))
        direct = x @ m.A.T + m.nonlinear_drift(x)
        assert np.abs(m.full_drift(x) - direct).max() <= 1e-14 * np.abs(direct).max()
        # and it equals the model's published drift
        v, u = x[:, 0], x[:, 1]
        F = np.stack([(v - v**3 - u) / 0.05, 1.5 * v - u + 0.1], axis=1)
        assert np.allclose(m.full_drift(x), F, rtol=1e-12)

    def test_flow_at_zero_is_identity(self):
        for m in (
            models.build_model("toy", sigma=1.0),
            models.build_model("fhn", eps=1.0, gamma=1.0, sigma2=1.0),
        ):
            x = np.array([[0.3] * m.d, [-2.0] * m.d])
            assert np.array_equal(m.flow(x, 0.0), x)

    def test_validation_lists_all_violations(self):
        with pytest.raises(ValueError) as err:
            models.build_model("fhn", eps=-1.0, gamma=0.0, sigma2=-2.0)
        msg = str(err.value)
        assert "eps" in msg and "gamma" in msg and "sigma2" in msg

    def test_toy_validation(self):
        with pytest.raises(ValueError):
            models.build_model("toy", sigma=0.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            models.build_model("vanderpol")

    def test_custom_requires_exact_identity_at_zero(self):
        with pytest.raises(ValueError, match="flow"):
            models.build_model(
                "custom",
                A=[[-1.0]],
                Sigma=[[1.0]],
                nonlinear_drift=lambda x: 0.0 * x,
                flow=lambda x, t: x + 1e-8,
            )

    def test_custom_default_propagator_uses_generic_linalg(self):
        m = models.build_model(
            "custom",
            A=[[-2.0]],
            Sigma=[[0.7]],
            nonlinear_drift=lambda x: 0.0 * x,
            flow=lambda x, t: np.asarray(x, dtype=float).copy(),
        )
        assert m.exp_At(0.5)[0, 0] == pytest.approx(np.exp(-1.0), rel=1e-12)
        expect = 0.49 * (1.0 - np.exp(-2.0 * 2.0 * 0.5)) / 4.0
        assert m.cov(0.5)[0, 0] == pytest.approx(expect, rel=1e-9)


class TestDeclaredConstants:
    def test_one_sided_lipschitz_witness(self):
        # (N(x) - N(y), x - y) <= c1 |x - y|^2 over 1e5 random pairs
        rng = np.random.default_rng(42)
        toy = models.build_model("toy", sigma=1.0)
        x = rng.uniform(-100, 100, size=(100_000, 1))
        y = rng.uniform(-100, 100, size=(100_000, 1))
        lhs = ((toy.nonlinear_drift(x) - toy.nonlinear_drift(y)) * (x - y)).sum(1)
        rhs = toy.constants["c1"] * ((x - y) ** 2).sum(1)
        assert np.all(lhs <= rhs + 1e-9 * (1.0 + rhs))

        fhn = models.build_model("fhn", eps=0.05, gamma=1.5, sigma2=0.2)
        x = rng.uniform(-100, 100, size=(100_000, 2))
        y = rng.uniform(-100, 100, size=(100_000, 2))
        dn = fhn.nonlinear_drift(x) - fhn.nonlinear_drift(y)
        lhs = np.einsum("ij,ij->i", dn, x - y)
        rhs = fhn.constants["c1"] * np.einsum("ij,ij->i", x - y, x - y)
        assert np.all(lhs <= rhs + 1e-9 * (1.0 + np.abs(rhs)))

    def test_polynomial_growth_witness(self):
        rng = np.random.default_rng(43)
        for name, kwargs in [
            ("toy", dict(sigma=1.0)),
            ("fhn", dict(eps=0.05, gamma=1.5, sigma2=0.2)),
        ]:
            m = models.build_model(name, **kwargs)
            c2, chi = m.constants["c2"], m.constants["chi"]
            x = rng.uniform(-100, 100, size=(100_000, m.d))
            y = rng.uniform(-100, 100, size=(100_000, m.d))
            dn = m.nonlinear_drift(x) - m.nonlinear_drift(y)
            lhs = np.einsum("ij,ij->i", dn, dn)
            nx = np.linalg.norm(x, axis=1) ** (2 * chi - 2)
            ny = np.linalg.norm(y, axis=1) ** (2 * chi - 2)
            rhs = c2 * (1.0 + nx + ny) * np.einsum("ij,ij->i", x - y, x - y)
            assert np.all(lhs <= rhs + 1e-9 * (1.0 + rhs))

    def test_fhn_c4_only_without_input(self):
        with_input = models.build_model("fhn", eps=1.0, gamma=1.0, beta=0.5, sigma2=1.0)
        assert "c4" not in with_input.constants
        free = models.build_model("fhn", eps=1.0, gamma=1.0, beta=0.0, sigma2=1.0)
        assert free.constants["c4"] == pytest.approx(0.5)
