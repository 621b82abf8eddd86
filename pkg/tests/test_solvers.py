import math

import mpmath as mp
import numpy as np
import pytest

from heatflow.expansion import PolynomialFamily, estimate_lambda_max
from heatflow.mesh import assemble_lb_operator
from heatflow.solvers import (
    EigenSystem,
    cosine_diffusion_1d,
    eigen_reference,
    eigen_smooth,
    fem_euler_smooth,
    heat_smooth,
    iterative_smooth,
    mse,
)

from conftest import make_grid_mesh

mp.mp.dps = 40


@pytest.fixture(scope="module")
def grid_op():
    return assemble_lb_operator(make_grid_mesh(10, 20, bump=0.2))


@pytest.fixture(scope="module")
def grid_field(grid_op):
    rng = np.random.default_rng(42)
    return rng.standard_normal(grid_op.n_vertices)


class TestHeatSmooth:
    def test_sigma_zero_is_identity(self, grid_op, grid_field):
        out = heat_smooth(grid_op, grid_field, 0.0)
        np.testing.assert_array_equal(out, grid_field)
        assert out is not grid_field

    def test_constant_field_invariant(self, grid_op):
        f = np.full(grid_op.n_vertices, -1.3)
        out = heat_smooth(grid_op, f, 0.5, m=150)
        np.testing.assert_allclose(out, -1.3, atol=1e-8)

    def test_matches_eigen_oracle(self, grid_op, grid_field):
        es = eigen_reference(grid_op, grid_op.n_vertices)
        for sigma in (0.01, 0.1):
            want = eigen_smooth(es, grid_op, grid_field, sigma)
            got = heat_smooth(grid_op, grid_field, sigma, m=200)
            assert np.abs(got - want).max() <= 1e-6

    def test_mass_conservation(self, grid_op, grid_field):
        g = heat_smooth(grid_op, grid_field, 0.3, m=200)
        before = float(grid_op.A @ grid_field)
        after = float(grid_op.A @ g)
        assert after == pytest.approx(before, rel=1e-8)

    def test_maximum_principle(self, grid_op, grid_field):
        g = heat_smooth(grid_op, grid_field, 0.2, m=200)
        rng_span = grid_field.max() - grid_field.min()
        assert g.min() >= grid_field.min() - 1e-6 * rng_span
        assert g.max() <= grid_field.max() + 1e-6 * rng_span

    def test_monotone_energy_decay(self, grid_op, grid_field):
        mean_field = np.full_like(grid_field, grid_op.A @ grid_field / grid_op.A.sum())
        errs = [
            mse(heat_smooth(grid_op, grid_field, s, m=200), mean_field)
            for s in (0.05, 0.1, 0.2, 0.4, 0.8)
        ]
        assert all(e2 <= e1 + 1e-12 for e1, e2 in zip(errs, errs[1:]))

    def test_unscaled_family_caution(self, grid_op, grid_field):
        sigma = 40.0 / estimate_lambda_max(grid_op)
        with pytest.warns(RuntimeWarning, match="grows before"):
            heat_smooth(grid_op, grid_field, sigma, family=PolynomialFamily.laguerre(), m=60)

    def test_degree_30_truncation_ordering_at_sigma_1_5(self):
        # chebyshev converges fastest, hermite slowest; visible in the
        # truncation MSE before the convergence knee
        op = assemble_lb_operator(make_grid_mesh(8, 8))
        es = eigen_reference(op, op.n_vertices)
        rng = np.random.default_rng(21)
        f = rng.standard_normal(op.n_vertices)
        want = eigen_smooth(es, op, f, 1.5)
        errs = {
            kind: mse(heat_smooth(op, f, 1.5, family=PolynomialFamily(kind), m=30), want)
            for kind in ("chebyshev", "laguerre", "hermite")
        }
        assert errs["chebyshev"] <= errs["laguerre"] <= errs["hermite"]

    def test_negative_sigma_rejected(self, grid_op, grid_field):
        with pytest.raises(ValueError, match="sigma"):
            heat_smooth(grid_op, grid_field, -0.1)


class TestIterativeSmooth:
    def test_single_step_equals_heat_smooth(self, grid_op, grid_field):
        got = iterative_smooth(grid_op, grid_field, 0.25, 1, m=200)
        want = heat_smooth(grid_op, grid_field, 0.25, m=200)
        assert len(got) == 1
        np.testing.assert_allclose(got[0], want, atol=1e-12)

    def test_semigroup_two_quarters_vs_half(self, grid_op, grid_field):
        twice = iterative_smooth(grid_op, grid_field, 0.25, 2, m=200)[-1]
        direct = heat_smooth(grid_op, grid_field, 0.5, m=200)
        assert np.abs(twice - direct).max() <= 1e-6

    def test_multiscale_stack_shape(self, grid_op, grid_field):
        fields = iterative_smooth(grid_op, grid_field, 0.0005, 10, m=80)
        assert len(fields) == 10
        for g in fields:
            assert np.all(np.isfinite(g))

    def test_bad_args(self, grid_op, grid_field):
        with pytest.raises(ValueError):
            iterative_smooth(grid_op, grid_field, -0.1, 2)
        with pytest.raises(ValueError):
            iterative_smooth(grid_op, grid_field, 0.1, 0)


class TestFemEuler:
    def test_constant_exact(self, grid_op):
        f = np.full(grid_op.n_vertices, 4.2)
        out = fem_euler_smooth(grid_op, f, 0.05, 25)
        np.testing.assert_array_equal(out, f)

    def test_stability_error_names_product(self, grid_op):
        lam = estimate_lambda_max(grid_op)
        sigma = 2.5 / lam  # delta * lambda_max = 2.5 with one step
        with pytest.raises(ValueError, match="2.5"):
            fem_euler_smooth(grid_op, np.ones(grid_op.n_vertices), sigma, 1)

    def test_converges_to_heat_solution(self, grid_op, grid_field):
        want = heat_smooth(grid_op, grid_field, 0.01, m=200)
        got = fem_euler_smooth(grid_op, grid_field, 0.01, 400)
        assert mse(got, want) <= 1e-10

    def test_sigma_zero(self, grid_op, grid_field):
        np.testing.assert_array_equal(
            fem_euler_smooth(grid_op, grid_field, 0.0, 10), grid_field
        )


class TestEigenReference:
    def test_constant_mode_and_residual(self, grid_op):
        es = eigen_reference(grid_op, 16)
        assert es.eigenvalues[0] <= 1e-8
        psi0 = es.eigenvectors[:, 0]
        assert np.abs(psi0 - psi0.mean()).max() <= 1e-8 * max(1.0, abs(psi0.mean()))
        resid = grid_op.C.dot(es.eigenvectors) - (grid_op.A[:, None] * es.eigenvectors) * es.eigenvalues
        assert np.abs(resid).max() <= 1e-8 * np.abs(grid_op.C.data).max()

    def test_a_orthonormal(self, grid_op):
        es = eigen_reference(grid_op, 12)
        gram = es.eigenvectors.T @ (grid_op.A[:, None] * es.eigenvectors)
        assert np.abs(gram - np.eye(12)).max() <= 1e-8

    def test_size_guard(self, grid_op):
        with pytest.raises(ValueError):
            eigen_reference(grid_op, 0)
        with pytest.raises(ValueError):
            eigen_reference(grid_op, grid_op.n_vertices + 1)

    def test_eigenvalues_nonnegative(self, grid_op):
        es = eigen_reference(grid_op, grid_op.n_vertices)
        assert es.eigenvalues.min() >= -1e-10 * max(1.0, es.eigenvalues.max())


class TestEigenSmooth:
    def test_completeness_at_sigma_zero(self, grid_op, grid_field):
        es = eigen_reference(grid_op, grid_op.n_vertices)
        out = eigen_smooth(es, grid_op, grid_field, 0.0)
        np.testing.assert_allclose(out, grid_field, atol=1e-8)

    def test_large_sigma_gives_weighted_mean(self, grid_op, grid_field):
        es = eigen_reference(grid_op, grid_op.n_vertices)
        out = eigen_smooth(es, grid_op, grid_field, 1e6)
        want = grid_op.A @ grid_field / grid_op.A.sum()
        np.testing.assert_allclose(out, want, atol=1e-8)

    def test_dimension_mismatch(self, grid_op):
        es = EigenSystem(np.array([0.0]), np.ones((3, 1)))
        with pytest.raises(ValueError):
            eigen_smooth(es, grid_op, np.ones(grid_op.n_vertices), 0.1)


class TestCosineDiffusion1D:
    def test_constant_preserved(self):
        out = cosine_diffusion_1d(np.ones(64), 0.37, 10)
        np.testing.assert_allclose(out, 1.0, atol=1e-12)

    def test_single_mode_decay(self):
        p = np.linspace(0.0, 1.0, 501)
        f = math.sqrt(2.0) * np.cos(np.pi * p)
        sigma = 1.0 / math.pi**2
        out = cosine_diffusion_1d(f, sigma, 8)
        want = math.sqrt(2.0) * math.exp(-1.0) * np.cos(np.pi * p)
        assert np.abs(out - want).max() <= 1e-6

    def test_matches_high_precision_mode_sum(self):
        rng = np.random.default_rng(9)
        n, k_max, sigma = 41, 12, 0.01
        f = rng.standard_normal(n)
        out = cosine_diffusion_1d(f, sigma, k_max)
        # same trapezoid mode sum evaluated in 40-digit arithmetic
        p = [mp.mpf(i) / (n - 1) for i in range(n)]
        w = [mp.mpf(1) / (n - 1)] * n
        w[0] /= 2
        w[-1] /= 2
        want = [mp.mpf(0)] * n
        for j in range(k_max + 1):
            psi = [
                mp.mpf(1) if j == 0 else mp.sqrt(2) * mp.cos(j * mp.pi * pi_)
                for pi_ in p
            ]
            cj = mp.fsum(w[i] * mp.mpf(float(f[i])) * psi[i] for i in range(n))
            decay = mp.e ** (-(j**2) * mp.pi**2 * sigma)
            for i in range(n):
                want[i] += decay * cj * psi[i]
        np.testing.assert_allclose(out, [float(v) for v in want], atol=1e-13)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            cosine_diffusion_1d(np.array([1.0]), 0.1, 3)


class TestMse:
    def test_identical(self):
        f = np.arange(5.0)
        assert mse(f, f) == 0.0

    def test_unit_offset(self):
        assert mse(np.zeros(2), np.ones(2)) == 1.0

    def test_arithmetic(self):
        assert mse(np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0, 5.0])) == pytest.approx(4.0 / 3.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mse(np.zeros(3), np.zeros(4))
