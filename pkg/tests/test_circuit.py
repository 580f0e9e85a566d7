import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmsense import (
    CircuitConfig,
    CircuitError,
    Covariance,
    DegenerateDirectionError,
    SignalParams,
    cca_objective,
    make_rank1_covariance,
    orthonormalize,
    pca_objective,
    project_modes,
    sample_displacements,
    uniform_direction,
)


class TestCircuitConfig:
    def test_rejects_non_unit_w(self):
        with pytest.raises(CircuitError):
            CircuitConfig(np.array([1.0, 1.0]))

    def test_rejects_non_orthogonal_u(self):
        with pytest.raises(CircuitError):
            CircuitConfig(np.array([1.0, 0.0]), np.array([1.0, 0.0]))

    def test_accepts_orthogonal_pair(self):
        c = CircuitConfig(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert c.mode_count == 2


class TestProjectModes:
    def test_basis_projection(self):
        c = CircuitConfig(np.array([1.0, 0.0]))
        assert project_modes(c, np.array([0.3, -0.1])).lambda_w == pytest.approx(0.3)

    def test_uniform_self_projection(self):
        v = uniform_direction(5)
        c = CircuitConfig(v)
        assert project_modes(c, 0.7 * v).lambda_w == pytest.approx(0.7)

    def test_orthogonal_projection_vanishes(self):
        v = uniform_direction(2)
        w = np.array([1.0, -1.0]) / np.sqrt(2)
        assert project_modes(CircuitConfig(w), 0.7 * v).lambda_w == pytest.approx(0.0)

    def test_u_projection(self):
        c = CircuitConfig(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        out = project_modes(c, np.array([0.3, -0.1]))
        assert out.lambda_u == pytest.approx(-0.1)

    def test_dimension_mismatch(self):
        with pytest.raises(CircuitError):
            project_modes(CircuitConfig(np.array([1.0, 0.0])), np.ones(3))


class TestOrthonormalize:
    def test_normalizes(self):
        c = orthonormalize(np.array([2.0, 0.0, 0.0]))
        assert np.allclose(c.w, [1.0, 0.0, 0.0])

    def test_gram_schmidt_step(self):
        c = orthonormalize(np.array([1.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0]))
        assert np.allclose(c.w, [0.0, 1.0, 0.0])

    def test_parallel_to_u_is_degenerate(self):
        u = np.array([1.0, 0.0])
        with pytest.raises(DegenerateDirectionError):
            orthonormalize(u.copy(), u)

    def test_zero_vector_is_degenerate(self):
        with pytest.raises(DegenerateDirectionError):
            orthonormalize(np.zeros(3))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=6))
    def test_idempotent(self, raw):
        raw = np.array(raw)
        if np.linalg.norm(raw) < 1e-6:
            return
        once = orthonormalize(raw).w
        twice = orthonormalize(once).w
        assert np.allclose(once, twice, atol=1e-12)


class TestObjectives:
    def test_pca_at_signal_direction(self):
        cov = make_rank1_covariance(SignalParams(21, 0.02))
        assert pca_objective(uniform_direction(21), cov) == pytest.approx(8.4e-3)

    def test_pca_orthogonal_to_signal(self):
        cov = make_rank1_covariance(SignalParams(2, 0.5))
        w = np.array([1.0, -1.0]) / np.sqrt(2)
        assert pca_objective(w, cov) == pytest.approx(0.0, abs=1e-15)

    def test_pca_identity_covariance(self):
        cov = Covariance(np.eye(4))
        rng = np.random.default_rng(0)
        w = rng.standard_normal(4)
        w /= np.linalg.norm(w)
        assert pca_objective(w, cov) == pytest.approx(1.0)

    def test_pca_sign_invariant(self):
        cov = make_rank1_covariance(SignalParams(3, 0.4))
        w = orthonormalize(np.array([1.0, 2.0, -1.0])).w
        assert pca_objective(w, cov) == pytest.approx(pca_objective(-w, cov))

    def test_pca_rayleigh_bound(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((5, 5))
        cov = Covariance(a @ a.T)
        top = np.linalg.eigvalsh(cov.matrix)[-1]
        for _ in range(200):
            w = rng.standard_normal(5)
            w /= np.linalg.norm(w)
            assert pca_objective(w, cov) <= top + 1e-10

    def test_cca_rank1_closed_form(self):
        m, sigma = 6, 0.1
        cov = make_rank1_covariance(SignalParams(m, sigma))
        v = uniform_direction(m)
        rng = np.random.default_rng(2)
        u = orthonormalize(rng.standard_normal(m)).w
        c = float(u @ v)
        w = orthonormalize(v - c * u, u).w
        expected = m * sigma ** 2 * abs(c) * np.sqrt(1 - c ** 2)
        assert abs(cca_objective(w, u, cov)) == pytest.approx(expected, rel=1e-10)

    def test_cca_zero_covariance(self):
        cov = make_rank1_covariance(SignalParams(3, 0.0))
        assert cca_objective(np.array([0.0, 1.0, 0.0]),
                             np.array([1.0, 0.0, 0.0]), cov) == 0.0

    def test_cca_sign_flips(self):
        cov = make_rank1_covariance(SignalParams(4, 0.3))
        u = orthonormalize(np.array([1.0, 0.0, 0.0, -1.0])).w
        w = orthonormalize(np.ones(4), u).w
        assert cca_objective(-w, u, cov) == pytest.approx(-cca_objective(w, u, cov))


class TestMonteCarloConsistency:
    def test_projected_second_moment_matches_pca_objective(self):
        cov = make_rank1_covariance(SignalParams(7, 0.3))
        rng = np.random.default_rng(3)
        w = orthonormalize(rng.standard_normal(7)).w
        lam = sample_displacements(cov, 100_000, rng)
        lw = lam @ w
        emp = np.mean(lw ** 2)
        se = np.std(lw ** 2) / np.sqrt(lw.size)
        assert abs(emp - pca_objective(w, cov)) < 5 * se

    def test_projected_cross_moment_matches_cca_objective(self):
        cov = make_rank1_covariance(SignalParams(7, 0.3))
        rng = np.random.default_rng(4)
        u = orthonormalize(rng.standard_normal(7)).w
        w = orthonormalize(rng.standard_normal(7), u).w
        lam = sample_displacements(cov, 100_000, rng)
        prod = (lam @ w) * (lam @ u)
        se = np.std(prod) / np.sqrt(prod.size)
        assert abs(prod.mean() - cca_objective(w, u, cov)) < 5 * se
