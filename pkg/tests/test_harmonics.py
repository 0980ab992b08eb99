import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from linf_sphere.errors import DomainError
from linf_sphere.harmonics import (
    RELU_COEFF_LOWER,
    RELU_COEFF_UPPER,
    HarmonicDim,
    LegendreTable,
    activation_sigma_k,
    build_quadrature,
    dim_harmonics,
    inner_product_mu,
    legendre_coefficients,
    legendre_eval,
    legendre_table,
    log_dim_harmonics,
    mu_density,
    normalized_legendre_eval,
    relu,
    relu_coeff_closed_form,
    relu_coeff_envelope,
    relu_coeff_quadrature,
    relu_coeffs,
    sqrt_dim,
)
from linf_sphere.sphere import sample_uniform_sphere


def count_harmonic_dim(d, k):
    # monomials of degree k minus monomials of degree k-2 (Laplacian is onto)
    def monomials(deg):
        if deg < 0:
            return 0
        return sum(1 for _ in itertools.combinations_with_replacement(range(d), deg))

    return monomials(k) - monomials(k - 2)


class TestDimension:
    @pytest.mark.parametrize("d,k,expected", [(3, 0, 1), (10, 1, 10), (3, 2, 5)])
    def test_examples(self, d, k, expected):
        assert dim_harmonics(d, k) == expected

    @pytest.mark.parametrize("d", [3, 4, 5, 7])
    @pytest.mark.parametrize("k", range(0, 7))
    def test_matches_monomial_count(self, d, k):
        assert dim_harmonics(d, k) == count_harmonic_dim(d, k)

    def test_large_arguments_are_exact_integers(self):
        n = dim_harmonics(64, 512)
        assert isinstance(n, int)
        assert n == math.comb(575, 63) - math.comb(573, 63)
        assert log_dim_harmonics(64, 512) == pytest.approx(math.log(n), rel=1e-15)
        assert sqrt_dim(64, 512) == pytest.approx(math.exp(0.5 * math.log(n)), rel=1e-14)

    @given(st.integers(3, 40), st.integers(1, 150))
    def test_strictly_increasing_in_degree(self, d, k):
        assert dim_harmonics(d, k + 1) > dim_harmonics(d, k) >= 1

    @given(st.integers(3, 64))
    def test_degree_one_is_d(self, d):
        assert dim_harmonics(d, 1) == d
        assert dim_harmonics(d, 0) == 1

    def test_named_tuple(self):
        assert HarmonicDim.of(3, 2) == (3, 2, 5)

    @pytest.mark.parametrize("d,k", [(2, 1), (3, -1), (3.5, 1)])
    def test_domain_errors(self, d, k):
        with pytest.raises(DomainError):
            dim_harmonics(d, k)


class TestLegendre:
    def test_low_degrees(self):
        table = LegendreTable(7, 3)
        assert legendre_eval(table, 0, 0.3) == 1.0
        assert legendre_eval(table, 1, 0.37) == 0.37

    def test_classical_degree_two(self):
        t = np.linspace(-1, 1, 101)
        np.testing.assert_allclose(legendre_eval(LegendreTable(3, 2), 2, t), (3 * t ** 2 - 1) / 2, atol=1e-15)

    @pytest.mark.parametrize("d", [4, 5, 10, 25])
    def test_gegenbauer_oracle(self, d):
        lam = (d - 2) / 2
        t = np.linspace(-1, 1, 301)
        table = legendre_table(d, 30)
        for k in (2, 5, 11, 30):
            expected = special.eval_gegenbauer(k, lam, t) / special.eval_gegenbauer(k, lam, 1.0)
            np.testing.assert_allclose(table.eval(k, t), expected, atol=1e-12)

    def test_normalized_examples(self):
        assert normalized_legendre_eval(LegendreTable(3, 2), 0, 0.5) == 1.0
        assert normalized_legendre_eval(LegendreTable(3, 2), 2, 1.0) == pytest.approx(math.sqrt(5), rel=1e-15)
        assert normalized_legendre_eval(LegendreTable(10, 1), 1, -1.0) == pytest.approx(-math.sqrt(10), rel=1e-15)

    @pytest.mark.parametrize("d", [3, 5, 10, 25])
    def test_unit_at_one_and_bounded(self, d):
        table = legendre_table(d, 40)
        t = np.linspace(-1, 1, 10_000)
        vals = table.eval_all(t)
        assert np.max(np.abs(vals[:, -1] - 1.0)) <= 1e-12
        assert np.max(np.abs(vals)) <= 1 + 1e-10

    @given(st.integers(3, 30), st.integers(0, 40), st.floats(-1, 1))
    def test_bounded_by_one(self, d, k, t):
        assert abs(legendre_table(d, 40).eval(k, t)) <= 1 + 1e-10

    def test_batch_matches_single_degree(self):
        table = legendre_table(6, 12)
        t = np.random.default_rng(3).uniform(-1, 1, (7, 9))
        batch = table.eval_all(t, normalized=True)
        for k in range(13):
            np.testing.assert_allclose(batch[k], table.eval(k, t, normalized=True), atol=1e-13)

    def test_series_matches_sum(self):
        table = legendre_table(5, 6)
        c = np.array([0.3, -1.0, 0.0, 2.0, 0.5, 0.0, 1.5])
        t = np.linspace(-1, 1, 77)
        expected = sum(c[k] * table.eval(k, t, normalized=True) for k in range(7))
        np.testing.assert_allclose(table.series(c, t), expected, atol=1e-12)

    def test_clamp_band(self):
        table = LegendreTable(5, 4)
        assert table.eval(4, 1 + 5e-13) == table.eval(4, 1.0)
        with pytest.raises(DomainError):
            table.eval(4, 1 + 1e-9)
        with pytest.raises(DomainError):
            table.eval(4, np.nan)
        with pytest.raises(DomainError):
            table.eval(5, 0.0)


class TestDensity:
    def test_examples(self):
        assert mu_density(3, 0.9) == pytest.approx(0.5, rel=1e-14)
        assert mu_density(5, 0.0) == pytest.approx(0.75, rel=1e-14)

    @pytest.mark.parametrize("d", [3, 4, 5, 10, 25])
    def test_integrates_to_one(self, d):
        val, _ = integrate.quad(lambda t: mu_density(d, t), -1, 1, limit=200)
        assert val == pytest.approx(1.0, abs=1e-9)

    def test_endpoints(self):
        assert mu_density(5, 1.0) == 0.0
        assert mu_density(4, -1.0) == 0.0
        assert mu_density(3, 1.0) == pytest.approx(0.5, rel=1e-14)
        with pytest.raises(DomainError):
            mu_density(5, 1.5)


class TestQuadrature:
    @pytest.mark.parametrize("d", [3, 4, 5, 6, 10, 25, 64])
    def test_constants_and_orthonormality(self, d):
        rule = build_quadrature(d, 20)
        assert rule.node_count == max(200, 4 * 21)
        assert abs(rule.integrate(np.ones(rule.node_count)) - 1.0) <= 1e-10
        basis = legendre_table(d, 20).eval_all(rule.nodes, normalized=True)
        gram = (basis * rule.weights) @ basis.T
        assert np.max(np.abs(gram - np.eye(21))) <= 1e-8

    def test_examples(self):
        rule = build_quadrature(7, 4)
        table = legendre_table(7, 4)
        p3 = table.eval(3, rule.nodes, normalized=True)
        p2 = table.eval(2, rule.nodes, normalized=True)
        p4 = table.eval(4, rule.nodes, normalized=True)
        assert rule.integrate(p3 * p3) == pytest.approx(1.0, abs=1e-8)
        assert abs(rule.integrate(p2 * p4)) <= 1e-8

    def test_against_adaptive_quadrature(self):
        d = 6
        f = lambda t: np.cos(3 * t) * np.exp(t)
        rule = build_quadrature(d, 10)
        ref, _ = integrate.quad(lambda t: f(t) * mu_density(d, t), -1, 1, epsabs=1e-13)
        assert rule.integrate(f(rule.nodes)) == pytest.approx(ref, abs=1e-12)

    def test_high_degree_orthonormality(self):
        rule = build_quadrature(10, 100)
        basis = legendre_table(10, 100).eval_all(rule.nodes, normalized=True)
        assert np.max(np.abs((basis * rule.weights) @ basis.T - np.eye(101))) <= 1e-8

    def test_breakpoint_validation(self):
        with pytest.raises(DomainError):
            build_quadrature(5, 3, breakpoints=(1.0,))


class TestInnerProducts:
    def test_self_inner_product(self):
        rule = build_quadrature(8, 6)
        table = legendre_table(8, 6)
        assert inner_product_mu(rule, lambda t: table.eval(6, t, normalized=True), 6) == pytest.approx(1, abs=1e-8)

    def test_relu_degree_one(self):
        assert relu_coeff_quadrature(9, 1) == pytest.approx(1 / 6, abs=1e-12)

    @pytest.mark.parametrize("d", [3, 5, 10])
    def test_smooth_decay(self, d):
        rule = build_quadrature(d, 30)
        coeffs = legendre_coefficients(rule, lambda t: np.exp(t - 1), 30)
        bound = np.array([2 / sqrt_dim(d, k) for k in range(31)])
        assert np.all(np.abs(coeffs) <= bound)


class TestReluCoefficients:
    def test_examples(self):
        assert relu_coeff_closed_form(25, 1) == 0.1
        assert relu_coeff_closed_form(7, 5) == 0.0
        assert relu_coeff_closed_form(3, 2) == pytest.approx(math.sqrt(5) / 16, rel=1e-14)
        assert relu_coeff_quadrature(3, 2) == pytest.approx(math.sqrt(5) / 16, rel=1e-8)

    @pytest.mark.parametrize("d", [3, 4, 5, 10, 30])
    def test_constant_term(self, d):
        # E[max(x_1, 0)] = E|x_1| / 2 = Gamma(d/2) / (2 sqrt(pi) Gamma((d+1)/2))
        expected = math.exp(math.lgamma(d / 2) - math.lgamma((d + 1) / 2)) / (2 * math.sqrt(math.pi))
        assert relu_coeff_closed_form(d, 0) == pytest.approx(expected, rel=1e-12)

    def test_monte_carlo_constant_term(self):
        pts = sample_uniform_sphere(5, 200_000, 11).coords
        vals = relu(pts[:, 0])
        assert abs(vals.mean() - relu_coeff_closed_form(5, 0)) <= 4 * vals.std() / math.sqrt(vals.size)

    @pytest.mark.parametrize("d", [3, 5, 10, 64])
    def test_sign_pattern_and_odd_zeros(self, d):
        for k in range(2, 41):
            tau = relu_coeff_closed_form(d, k)
            if k % 2:
                assert tau == 0.0
            else:
                assert np.sign(tau) == (-1) ** ((k - 2) // 2)

    def test_no_overflow_large_arguments(self):
        tau = relu_coeff_closed_form(64, 400)
        assert np.isfinite(tau) and tau != 0.0

    @pytest.mark.parametrize("d", [3, 5, 10, 25])
    def test_sandwich(self, d):
        for k in range(4, 61, 2):
            env = relu_coeff_envelope(d, k)
            assert RELU_COEFF_LOWER * env <= abs(relu_coeff_closed_form(d, k)) <= RELU_COEFF_UPPER * env

    def test_coefficient_table(self):
        rc = relu_coeffs(5, 6)
        assert rc.max_degree == 6
        np.testing.assert_array_equal(rc.taus, [relu_coeff_closed_form(5, k) for k in range(7)])

    def test_negative_degree(self):
        with pytest.raises(DomainError):
            relu_coeff_closed_form(5, -1)


class TestActivation:
    def test_degree_zero_is_constant(self):
        t = np.linspace(-1, 1, 11)
        np.testing.assert_allclose(activation_sigma_k(5, 0, t), relu_coeff_closed_form(5, 0), rtol=1e-15)

    @pytest.mark.parametrize("d,k", [(3, 4), (5, 8), (10, 20), (25, 6)])
    def test_size_bound(self, d, k):
        t = np.linspace(-1, 1, 10_000)
        assert np.max(np.abs(activation_sigma_k(d, k, t))) <= 1200 * sqrt_dim(d, k)

    @pytest.mark.parametrize("d,k", [(3, 6), (5, 10), (10, 7)])
    def test_is_low_degree_projection_of_relu(self, d, k):
        rule = build_quadrature(d, k, breakpoints=(0.0,))
        for l in range(k + 1):
            resid = inner_product_mu(rule, lambda t: activation_sigma_k(d, k, t) - relu(t), l)
            assert abs(resid) <= 1e-8

    def test_converges_to_relu(self):
        t = np.linspace(-1, 1, 401)
        err_lo = np.max(np.abs(activation_sigma_k(5, 8, t) - relu(t)))
        err_hi = np.max(np.abs(activation_sigma_k(5, 64, t) - relu(t)))
        assert err_hi < err_lo


class TestFunkHecke:
    @pytest.mark.parametrize("k", [1, 2, 4, 6])
    def test_relu_ridge_projection(self, k):
        # E_z[ReLU(u.z) Pbar_k(u.z)] = tau_k, by Monte Carlo over the sphere
        d = 5
        pts = sample_uniform_sphere(d, 400_000, 100 + k).coords
        u = np.zeros(d)
        u[0] = 1.0
        t = pts @ u
        vals = relu(t) * legendre_table(d, k).eval(k, t, normalized=True)
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean() - relu_coeff_closed_form(d, k)) <= 4 * se

    def test_one_dimensional_reduction(self):
        # the sphere average of g(u.z) equals the mu_d integral of g
        d, k = 7, 4
        rule = build_quadrature(d, k, breakpoints=(0.0,))
        table = legendre_table(d, k)
        one_d = rule.integrate(relu(rule.nodes) * table.eval(k, rule.nodes, normalized=True))
        assert one_d == pytest.approx(relu_coeff_closed_form(d, k), rel=1e-10)
