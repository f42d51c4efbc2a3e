"""Tests for sphere geometry, Gegenbauer kernels, quadrature, and the activation spectrum."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import beta as beta_fn
from scipy.special import eval_gegenbauer, eval_legendre, roots_jacobi

from ridgeline.harmonics import (
    ActivationSpectrum,
    GegenbauerTable,
    ZeroTag,
    gegenbauer_eval,
    gegenbauer_series,
    harmonic_dim,
    jacobi_nodes,
    sigma_hat_closed,
    sigma_hat_quad,
    sigma_k,
    surface_area,
)


class TestSurfaceArea:
    def test_frozen_values(self):
        """omega_0 = 2, omega_1 = 2 pi, omega_2 = 4 pi."""
        np.testing.assert_allclose(surface_area(0), 2.0, rtol=1e-13)
        np.testing.assert_allclose(surface_area(1), 2.0 * math.pi, rtol=1e-13)
        np.testing.assert_allclose(surface_area(2), 4.0 * math.pi, rtol=1e-13)

    def test_direct_gamma_oracle(self):
        """Matches 2 pi^{(j+1)/2} / Gamma((j+1)/2) evaluated without logs."""
        for j in range(0, 30):
            direct = 2.0 * math.pi ** ((j + 1) / 2) / math.gamma((j + 1) / 2)
            np.testing.assert_allclose(surface_area(j), direct, rtol=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            surface_area(-1)


class TestHarmonicDim:
    def test_frozen_values(self):
        assert harmonic_dim(5, 0) == 1
        assert harmonic_dim(1, 7) == 2
        assert harmonic_dim(2, 1) == 3

    @given(d=st.integers(min_value=1, max_value=12), n=st.integers(min_value=0, max_value=60))
    def test_binomial_difference_oracle(self, d, n):
        """N(d,n) = C(n+d,d) - C(n+d-2,d), the independent dimension-count identity."""
        lower = math.comb(n + d - 2, d) if n + d - 2 >= 0 else 0
        assert harmonic_dim(d, n) == math.comb(n + d, d) - lower

    def test_d1_always_two(self):
        """On the circle every positive degree has a two-dimensional harmonic space."""
        assert all(harmonic_dim(1, n) == 2 for n in range(1, 50))

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            harmonic_dim(0, 3)
        with pytest.raises(ValueError):
            harmonic_dim(2, -1)


class TestGegenbauer:
    def test_frozen_chebyshev_value(self):
        """d=1: P_2(1/2) = cos(2 arccos 1/2) = -1/2."""
        np.testing.assert_allclose(gegenbauer_eval(1, 2, 0.5), -0.5, atol=1e-14)

    def test_endpoint_normalization(self):
        """P_n(1) = 1 for every dimension."""
        for d in range(1, 6):
            for n in (0, 1, 2, 5, 20, 100, 200):
                np.testing.assert_allclose(gegenbauer_eval(d, n, 1.0), 1.0, atol=1e-12)

    @given(
        n=st.integers(min_value=0, max_value=40),
        t=st.floats(min_value=-1.0, max_value=1.0),
    )
    @settings(max_examples=60)
    def test_chebyshev_oracle_d1(self, n, t):
        np.testing.assert_allclose(gegenbauer_eval(1, n, t), math.cos(n * math.acos(t)), atol=1e-11)

    @given(
        n=st.integers(min_value=0, max_value=30),
        t=st.floats(min_value=-1.0, max_value=1.0),
    )
    @settings(max_examples=60)
    def test_legendre_oracle_d2(self, n, t):
        np.testing.assert_allclose(gegenbauer_eval(2, n, t), eval_legendre(n, t), atol=1e-10)

    def test_scipy_gegenbauer_oracle(self):
        """Normalized ultraspherical values match scipy's C_n^lambda / C_n^lambda(1) for d >= 3."""
        rng = np.random.default_rng(42)
        for d in (3, 4, 5):
            lam = (d - 1) / 2.0
            for n in (1, 2, 7, 19, 40):
                t = float(rng.uniform(-1, 1))
                expected = eval_gegenbauer(n, lam, t) / eval_gegenbauer(n, lam, 1.0)
                np.testing.assert_allclose(gegenbauer_eval(d, n, t), expected, atol=1e-10)

    @given(
        d=st.integers(min_value=1, max_value=5),
        n=st.integers(min_value=0, max_value=200),
        t=st.floats(min_value=-1.0, max_value=1.0),
    )
    @settings(max_examples=80)
    def test_bounded_by_one(self, d, n, t):
        """|P_n(t)| <= 1 on [-1, 1]."""
        assert abs(gegenbauer_eval(d, n, t)) <= 1.0 + 1e-12

    def test_table_matches_pointwise_eval(self):
        rng = np.random.default_rng(7)
        t = rng.uniform(-1, 1, size=11)
        for d in (1, 2, 3):
            table = GegenbauerTable(d=d, n_max=25).eval_all(t)
            for n in (0, 1, 2, 10, 25):
                expected = [gegenbauer_eval(d, n, ti) for ti in t]
                np.testing.assert_allclose(table[n], expected, atol=1e-11)

    def test_series_is_coefficient_sum(self):
        rng = np.random.default_rng(3)
        coeffs = rng.normal(size=12)
        t = rng.uniform(-1, 1, size=9)
        for d in (1, 2, 3):
            direct = sum(c * np.array([gegenbauer_eval(d, n, ti) for ti in t]) for n, c in enumerate(coeffs))
            np.testing.assert_allclose(gegenbauer_series(d, coeffs, t), direct, atol=1e-10)

    def test_addition_formula_d1(self):
        """On the circle: N(1,n) P_n(cos(a-b)) = 2 cos(n(a-b)) = sum of the two degree-n harmonics."""
        rng = np.random.default_rng(11)
        for _ in range(20):
            a, b = rng.uniform(0, 2 * math.pi, size=2)
            for n in (1, 3, 8):
                lhs = harmonic_dim(1, n) * gegenbauer_eval(1, n, math.cos(a - b))
                rhs = 2 * (math.cos(n * a) * math.cos(n * b) + math.sin(n * a) * math.sin(n * b))
                np.testing.assert_allclose(lhs, rhs, atol=1e-11)

    def test_orthogonality_under_rho(self):
        """int P_n P_m drho = 0 for n != m, computed with the module's own Gauss rule."""
        for d in (1, 2, 3):
            quad = jacobi_nodes(d, 40)
            table = GegenbauerTable(d=d, n_max=8).eval_all(quad.nodes)
            gram = np.einsum("it,t,jt->ij", table, quad.rho_weights, table)
            off = gram - np.diag(np.diag(gram))
            assert np.max(np.abs(off)) < 1e-12
            assert np.all(np.diag(gram) > 0)


class TestJacobiQuadrature:
    def test_frozen_two_point_rule_d2(self):
        """d=2, count=2: Gauss-Legendre nodes +/- 1/sqrt(3), rho-weights 1/2."""
        q = jacobi_nodes(2, 2)
        np.testing.assert_allclose(q.nodes, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-14)
        np.testing.assert_allclose(q.rho_weights, [0.5, 0.5], atol=1e-14)

    def test_frozen_second_moment_d1(self):
        """d=1, count=16: int t^2 drho = 1/2."""
        q = jacobi_nodes(1, 16)
        np.testing.assert_allclose(np.dot(q.rho_weights, q.nodes**2), 0.5, atol=1e-12)

    def test_rho_weights_sum_to_one(self):
        for d in (1, 2, 3, 4, 5):
            q = jacobi_nodes(d, 24)
            np.testing.assert_allclose(q.rho_weights.sum(), 1.0, atol=1e-12)

    def test_nodes_interior_ascending_weights_positive(self):
        for d in (1, 2, 3):
            for count in (1, 2, 7, 33):
                q = jacobi_nodes(d, count)
                assert np.all(np.diff(q.nodes) > 0)
                assert np.all(np.abs(q.nodes) < 1.0)
                assert np.all(q.weights > 0)

    def test_scipy_roots_jacobi_oracle(self):
        """Nodes/weights agree with scipy's independent Gauss-Jacobi construction."""
        for d in (1, 2, 3, 4):
            e = (d - 2) / 2.0
            q = jacobi_nodes(d, 21)
            x, w = roots_jacobi(21, e, e)
            np.testing.assert_allclose(q.nodes, x, atol=1e-12)
            np.testing.assert_allclose(q.weights, w, atol=1e-12)

    def test_even_moment_oracle(self):
        """Exact on polynomials through degree 2*count-1: moments match Beta-function values."""
        for d in (1, 2, 3):
            e = (d - 2) / 2.0
            count = 12
            q = jacobi_nodes(d, count)
            for j in range(0, count):  # t^{2j}, degree 2j <= 2*count - 2
                exact = beta_fn(j + 0.5, e + 1.0)
                np.testing.assert_allclose(
                    q.integrate(q.nodes ** (2 * j)), exact, rtol=1e-12, err_msg=f"d={d} j={j}"
                )
            # odd moments vanish by symmetry
            assert abs(q.integrate(q.nodes**3)) < 1e-14

    def test_bad_count_rejected(self):
        with pytest.raises(ValueError):
            jacobi_nodes(2, 0)


class TestSigmaK:
    def test_heaviside_vanishes_at_kink(self):
        """sigma_0(0) := 0 by convention."""
        assert sigma_k(0.0, 0) == 0.0
        assert sigma_k(1e-300, 0) == 1.0
        assert sigma_k(-1e-300, 0) == 0.0

    def test_powers(self):
        np.testing.assert_allclose(sigma_k(np.array([-2.0, 0.0, 0.5, 2.0]), 2), [0.0, 0.0, 0.25, 4.0])


class TestSigmaHat:
    def test_frozen_closed_values(self):
        """sigma_hat_1(0) = 1/pi and sigma_hat_0(0) = 1/2 on the circle."""
        np.testing.assert_allclose(sigma_hat_closed(1, 1, 0), 1.0 / math.pi, rtol=1e-13)
        np.testing.assert_allclose(sigma_hat_closed(0, 1, 0), 0.5, rtol=1e-13)

    def test_structural_zero_tag(self):
        """k=1, d=3, n=3 sits in the vanishing parity class."""
        assert isinstance(sigma_hat_closed(1, 3, 3), ZeroTag)
        assert float(sigma_hat_closed(1, 3, 3)) == 0.0

    def test_low_degree_band_rejected(self):
        """1 <= n <= k has no closed form."""
        with pytest.raises(ValueError):
            sigma_hat_closed(1, 1, 1)
        with pytest.raises(ValueError):
            sigma_hat_closed(3, 2, 2)

    def test_frozen_quadrature_values(self):
        """Hand-derived circle values: sigma_hat_1(1) = 1/4, sigma_hat_1(2) = 1/(3 pi)."""
        quad = jacobi_nodes(1, 32)
        np.testing.assert_allclose(sigma_hat_quad(1, 1, 1, quad), 0.25, atol=1e-13)
        np.testing.assert_allclose(sigma_hat_quad(1, 1, 2, quad), 1.0 / (3.0 * math.pi), atol=1e-13)
        np.testing.assert_allclose(sigma_hat_quad(0, 1, 0, quad), 0.5, atol=1e-13)

    def test_hand_derived_s2_value_on_s3(self):
        """sigma_hat_2(5) on S^3 equals -4/(945 pi), worked out from the Gamma product."""
        val = sigma_hat_closed(2, 3, 5)
        np.testing.assert_allclose(val, -4.0 / (945.0 * math.pi), rtol=1e-12)
        quad = jacobi_nodes(3, 24)
        np.testing.assert_allclose(sigma_hat_quad(2, 3, 5, quad), val, atol=1e-14)

    def test_quad_sees_structural_zeros(self):
        """Quadrature reproduces the vanishing pattern to 1e-12."""
        quad = jacobi_nodes(2, 40)
        assert abs(sigma_hat_quad(1, 2, 3, quad)) < 1e-12
        assert abs(sigma_hat_quad(2, 2, 4, quad)) < 1e-12

    def test_closed_equals_quad_broadly(self):
        """Dual routes agree to 1e-10 absolute for k <= 2, d <= 3, n <= 40."""
        for k in range(3):
            for d in range(1, 4):
                quad = jacobi_nodes(d, 40 + k + 8)
                for n in range(41):
                    if 1 <= n <= k:
                        continue
                    cv = sigma_hat_closed(k, d, n)
                    cv = 0.0 if isinstance(cv, ZeroTag) else cv
                    qv = sigma_hat_quad(k, d, n, quad)
                    assert abs(cv - qv) < 1e-10, (k, d, n)

    def test_node_count_precondition(self):
        quad = jacobi_nodes(1, 10)
        with pytest.raises(ValueError):
            sigma_hat_quad(1, 1, 6, quad)

    def test_dimension_mismatch_rejected(self):
        quad = jacobi_nodes(2, 32)
        with pytest.raises(ValueError):
            sigma_hat_quad(1, 1, 1, quad)

    def test_zero_pattern_exhaustive(self):
        """Vanishes iff n >= k+1 and n = k (mod 2), checked for k <= 2, d <= 3, n <= 40."""
        for k in range(3):
            for d in range(1, 4):
                spec = ActivationSpectrum.build(k, d, 40)
                for n in range(41):
                    structural = n >= k + 1 and (n - k) % 2 == 0
                    assert spec.is_zero(n) == structural
                    if structural:
                        assert spec.coeffs[n] == 0.0
                    else:
                        assert abs(spec.coeffs[n]) > 1e-9

    def test_asymptotic_decay_slope(self):
        """log|sigma_hat| vs log n slopes to -(d+2k+1)/2 over [20, 200] where the 1/n bias allows."""
        for k, d in [(0, 1), (1, 1), (2, 1), (1, 2), (2, 2)]:
            ns, vals = [], []
            for n in range(20, 201):
                v = sigma_hat_closed(k, d, n) if n > k else None
                if v is None or isinstance(v, ZeroTag):
                    continue
                ns.append(n)
                vals.append(abs(v))
            slope = np.polyfit(np.log(ns), np.log(vals), 1)[0]
            assert abs(slope - (-(d + 2 * k + 1) / 2.0)) < 0.05, (k, d, slope)


class TestActivationSpectrum:
    def test_build_matches_pointwise_routes(self):
        spec = ActivationSpectrum.build(2, 2, 20)
        quad = jacobi_nodes(2, 20 + 2 + 8)
        for n in range(21):
            np.testing.assert_allclose(spec.value(n), sigma_hat_quad(2, 2, n, quad), atol=1e-12)

    def test_all_finite(self):
        spec = ActivationSpectrum.build(3, 4, 64)
        assert np.all(np.isfinite(spec.coeffs))

    def test_n_max(self):
        assert ActivationSpectrum.build(1, 1, 7).n_max == 7
