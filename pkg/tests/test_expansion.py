import json
import math

import mpmath as mp
import numpy as np
import pytest
from scipy import special as sp

import heatflow.expansion as ex
from heatflow.expansion import (
    ExpansionCoefficients,
    PolynomialFamily,
    apply_expansion,
    chebyshev_coefficients,
    coefficients_from_json,
    estimate_lambda_max,
    evaluate_expansion,
    heat_coefficients,
    hermite_coefficients,
    jacobi_coefficients,
    laguerre_coefficients,
    numeric_coefficients,
    recurrence_params,
)
from heatflow.mesh import assemble_lb_operator

from conftest import make_grid_mesh

mp.mp.dps = 40


def dense_eigensystem(op):
    """Dense generalized eigendecomposition oracle: C psi = lam A psi."""
    d = 1.0 / np.sqrt(op.A)
    B = (d[:, None] * op.C.toarray()) * d[None, :]
    B = 0.5 * (B + B.T)
    lam, U = np.linalg.eigh(B)
    return lam, d[:, None] * U


def spectral_filter_oracle(op, f, weight_values, lam, psi):
    return psi @ (weight_values * (psi.T @ (op.A * f)))


class TestRecurrenceParams:
    def test_chebyshev_n0(self):
        assert recurrence_params(PolynomialFamily.chebyshev(b=1.0), 0) == (1.0, 0.0, -1.0)

    def test_chebyshev_n3(self):
        assert recurrence_params(PolynomialFamily.chebyshev(b=1.0), 3) == (2.0, 0.0, -1.0)

    def test_hermite_n3(self):
        assert recurrence_params(PolynomialFamily.hermite(), 3) == (2.0, 0.0, -6.0)

    def test_laguerre_n1(self):
        A, B, C = recurrence_params(PolynomialFamily.laguerre(), 1)
        assert (A, B, C) == (-0.5, 1.5, -0.5)

    @pytest.mark.parametrize("alpha,beta", [(0.0, 0.0), (-0.5, -0.5), (1.0, 0.3), (2.5, -0.9)])
    def test_jacobi_matches_scipy(self, alpha, beta):
        fam = PolynomialFamily.jacobi(alpha, beta, b=2.0)
        x = np.linspace(-1.0, 1.0, 31)
        table = ex._polynomial_table(fam, 12, x)
        for n in range(13):
            np.testing.assert_allclose(
                table[n], sp.eval_jacobi(n, alpha, beta, x), rtol=1e-10, atol=1e-12
            )

    def test_family_validation(self):
        with pytest.raises(ValueError):
            PolynomialFamily("fourier")
        with pytest.raises(ValueError):
            PolynomialFamily.jacobi(-1.5, 0.0)
        with pytest.raises(ValueError):
            PolynomialFamily.chebyshev(b=-2.0)


class TestChebyshevCoefficients:
    def test_sigma_zero_identity(self):
        c = chebyshev_coefficients(0.0, 5.0, 3)
        np.testing.assert_array_equal(c.coeffs, [1.0, 0.0, 0.0, 0.0])

    def test_matches_bessel_closed_form(self):
        sigma, b = 0.3, 12.0
        x = 0.5 * b * sigma
        c = chebyshev_coefficients(sigma, b, 6)
        for n in range(7):
            want = float((2.0 if n else 1.0) * (-1) ** n * mp.exp(-x) * mp.besseli(n, x))
            assert c.coeffs[n] == pytest.approx(want, rel=1e-11, abs=1e-300)

    @pytest.mark.parametrize("sigma,b", [(0.01, 10.0), (0.1, 100.0), (1.0, 50.0)])
    def test_generating_function_sums(self, sigma, b):
        m = int(b * sigma / 2) + 40
        c = chebyshev_coefficients(sigma, b, m).coeffs
        assert c.sum() == pytest.approx(math.exp(-b * sigma), abs=1e-10)
        assert (c * (-1.0) ** np.arange(m + 1)).sum() == pytest.approx(1.0, abs=1e-10)


class TestJacobiCoefficients:
    def test_sigma_zero(self):
        c = jacobi_coefficients(0.0, 4.0, 0.7, -0.2, 2)
        np.testing.assert_array_equal(c.coeffs, [1.0, 0.0, 0.0])

    def test_chebyshev_jacobi_cross_family(self):
        # T_n = 4^n (n!)^2 / (2n)! P_n^(-1/2,-1/2); both expansions must
        # rebuild the same exponential weight pointwise
        sigma, b, m = 0.1, 10.0, 40
        cheb = chebyshev_coefficients(sigma, b, m)
        jac = jacobi_coefficients(sigma, b, -0.5, -0.5, m)
        lam = np.linspace(0.0, b, 101)
        np.testing.assert_allclose(
            evaluate_expansion(cheb, lam), evaluate_expansion(jac, lam), atol=1e-9
        )

    def test_legendre_weight_reconstruction(self):
        sigma, b, m = 0.05, 100.0, 60
        c = jacobi_coefficients(sigma, b, 0.0, 0.0, m)
        lam = np.linspace(0.0, b, 101)
        err = np.abs(evaluate_expansion(c, lam) - np.exp(-lam * sigma))
        assert err.max() <= 1e-8

    def test_coefficient_magnitudes_survive_large_bsigma(self):
        c = jacobi_coefficients(1.0, 2000.0, 0.0, 0.0, 120)
        assert np.all(np.isfinite(c.coeffs))


class TestHermiteCoefficients:
    def test_sigma_zero(self):
        np.testing.assert_array_equal(hermite_coefficients(0.0, 3).coeffs, [1, 0, 0, 0])

    def test_sigma_two_degree_one(self):
        c = hermite_coefficients(2.0, 1).coeffs
        assert c[0] == pytest.approx(math.e, rel=1e-13)
        assert c[1] == pytest.approx(-math.e, rel=1e-13)

    def test_weight_reconstruction(self):
        c = hermite_coefficients(1.0, 40)
        lam = np.linspace(0.0, 5.0, 101)
        err = np.abs(evaluate_expansion(c, lam) - np.exp(-lam))
        assert err.max() <= 1e-8


class TestLaguerreCoefficients:
    def test_sigma_zero(self):
        np.testing.assert_array_equal(laguerre_coefficients(0.0, 3).coeffs, [1, 0, 0, 0])

    def test_sigma_one_geometric(self):
        np.testing.assert_allclose(
            laguerre_coefficients(1.0, 3).coeffs, [0.5, 0.25, 0.125, 0.0625], rtol=1e-14
        )

    def test_weight_reconstruction(self):
        c = laguerre_coefficients(0.5, 60)
        lam = np.linspace(0.0, 20.0, 101)
        err = np.abs(evaluate_expansion(c, lam) - np.exp(-lam * 0.5))
        assert err.max() <= 1e-8


class TestNumericCoefficients:
    def test_constant_weight_is_p0(self):
        fam = PolynomialFamily.chebyshev(b=7.0)
        c = numeric_coefficients(lambda lam: np.ones_like(lam), fam, 10)
        assert c.coeffs[0] == pytest.approx(1.0, abs=1e-12)
        assert np.abs(c.coeffs[1:]).max() <= 1e-12

    def test_matches_chebyshev_closed_form(self):
        sigma, b, m = 0.01, 100.0, 60
        closed = chebyshev_coefficients(sigma, b, m).coeffs
        num = numeric_coefficients(
            lambda lam: np.exp(-lam * sigma), PolynomialFamily.chebyshev(b=b), m
        ).coeffs
        assert np.abs(closed - num).max() <= 1e-8 * np.abs(closed).max()

    def test_matches_jacobi_closed_form(self):
        sigma, b, m = 0.1, 10.0, 40
        closed = jacobi_coefficients(sigma, b, 0.4, -0.3, m).coeffs
        num = numeric_coefficients(
            lambda lam: np.exp(-lam * sigma), PolynomialFamily.jacobi(0.4, -0.3, b=b), m
        ).coeffs
        assert np.abs(closed - num).max() <= 1e-8 * np.abs(closed).max()

    def test_hermite_rejected(self):
        with pytest.raises(ValueError, match="chebyshev/jacobi"):
            numeric_coefficients(lambda lam: lam, PolynomialFamily.hermite(), 5)


class TestEstimateLambdaMax:
    def test_bracket_against_dense_oracle(self):
        for bump in (0.0, 0.5):
            mesh = make_grid_mesh(9, 8, bump=bump)
            op = assemble_lb_operator(mesh)
            lam, _ = dense_eigensystem(op)
            got = estimate_lambda_max(op)
            assert lam.max() <= got <= 1.2 * lam.max()

    def test_cached_on_operator(self):
        op = assemble_lb_operator(make_grid_mesh(5, 5))
        got = estimate_lambda_max(op)
        assert op.lambda_max_hint == got
        assert estimate_lambda_max(op) == got

    def test_resolution_increases_bound(self):
        coarse = assemble_lb_operator(make_grid_mesh(6, 6, spacing=1.0))
        fine = assemble_lb_operator(make_grid_mesh(11, 11, spacing=0.5))
        assert estimate_lambda_max(fine) > estimate_lambda_max(coarse)


class TestApplyExpansion:
    def test_identity_filter(self):
        op = assemble_lb_operator(make_grid_mesh(6, 6, bump=0.3))
        rng = np.random.default_rng(3)
        f = rng.standard_normal(op.n_vertices)
        coeffs = ExpansionCoefficients(
            PolynomialFamily.chebyshev(b=10.0), None, np.array([1.0, 0.0, 0.0])
        )
        np.testing.assert_allclose(apply_expansion(op, coeffs, f), f, atol=1e-14)

    def test_constant_field_preserved_by_heat_weights(self):
        op = assemble_lb_operator(make_grid_mesh(7, 7, bump=0.4))
        b = estimate_lambda_max(op)
        coeffs = chebyshev_coefficients(0.2, b, 80)
        f = np.full(op.n_vertices, 2.5)
        got = apply_expansion(op, coeffs, f)
        np.testing.assert_allclose(got, 2.5, atol=1e-8)

    def test_matches_dense_spectral_oracle(self):
        mesh = make_grid_mesh(10, 20)  # 200 vertices
        op = assemble_lb_operator(mesh)
        lam, psi = dense_eigensystem(op)
        rng = np.random.default_rng(11)
        f = rng.standard_normal(op.n_vertices)
        sigma = 0.1
        b = estimate_lambda_max(op)
        coeffs = chebyshev_coefficients(sigma, b, 100)
        got = apply_expansion(op, coeffs, f)
        want = spectral_filter_oracle(op, f, np.exp(-lam * sigma), lam, psi)
        assert np.abs(got - want).max() <= 1e-6

    def test_linearity(self):
        op = assemble_lb_operator(make_grid_mesh(6, 7, bump=0.2))
        b = estimate_lambda_max(op)
        coeffs = chebyshev_coefficients(0.05, b, 50)
        rng = np.random.default_rng(5)
        f = rng.standard_normal(op.n_vertices)
        g = rng.standard_normal(op.n_vertices)
        lhs = apply_expansion(op, coeffs, 2.5 * f + g)
        rhs = 2.5 * apply_expansion(op, coeffs, f) + apply_expansion(op, coeffs, g)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * np.abs(rhs).max())

    def test_exactly_m_matvecs(self, monkeypatch):
        real = ex.apply_lb
        calls = []
        monkeypatch.setattr(ex, "apply_lb", lambda op, f: calls.append(1) or real(op, f))
        op = assemble_lb_operator(make_grid_mesh(5, 5))
        coeffs = chebyshev_coefficients(0.1, 10.0, 37)
        apply_expansion(op, coeffs, np.ones(op.n_vertices))
        assert len(calls) == 37

    def test_nan_guard_names_degree(self):
        # Hermite on an operator with large spectrum overflows the raw
        # H_n(Delta) f values; the guard must fail fast with the degree
        op = assemble_lb_operator(make_grid_mesh(8, 8, spacing=0.12))
        coeffs = hermite_coefficients(1.0, 400)
        with pytest.raises(RuntimeError, match="degree"):
            apply_expansion(op, coeffs, np.linspace(-1, 1, op.n_vertices))

    def test_length_mismatch(self):
        op = assemble_lb_operator(make_grid_mesh(5, 5))
        coeffs = chebyshev_coefficients(0.1, 10.0, 5)
        with pytest.raises(ValueError, match="length"):
            apply_expansion(op, coeffs, np.ones(7))


class TestJsonRoundTrip:
    def test_roundtrip(self):
        c = jacobi_coefficients(0.2, 30.0, 0.5, -0.25, 12)
        d = json.loads(json.dumps(c.to_json_dict()))
        back = coefficients_from_json(d)
        assert back.family == c.family
        assert back.sigma == c.sigma
        np.testing.assert_array_equal(back.coeffs, c.coeffs)

    def test_heat_coefficients_dispatch(self):
        fam = PolynomialFamily.laguerre()
        c = heat_coefficients(fam, 0.5, 8)
        np.testing.assert_allclose(c.coeffs, laguerre_coefficients(0.5, 8).coeffs)
        with pytest.raises(ValueError, match="domain scale"):
            heat_coefficients(PolynomialFamily.chebyshev(), 0.5, 8)
