"""Tests for the sphere lift, bump profile, lowering operator, and target catalog."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ridgeline.lift import (
    LOWER_CUT,
    SUPPORT_RADIUS,
    UPPER_CUT,
    BumpProfile,
    SphereFunction,
    TargetFunction,
    apply_lowering,
    ball_grid,
    lift_to_sphere,
    make_target,
    parity_for_k,
)


def random_sphere_points(d, count, seed=0):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((count, d + 1))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


class TestBumpProfile:
    def test_plateaus(self):
        """chi = 0 at or below 1/(2 sqrt 2) and chi = 1 at or above 1/sqrt 2."""
        chi = BumpProfile()
        assert chi(LOWER_CUT) == 0.0
        assert chi(0.0) == 0.0
        assert chi(-1.0) == 0.0
        assert chi(UPPER_CUT) == 1.0
        assert chi(1.0) == 1.0

    def test_midpoint_symmetry(self):
        """The glue is symmetric about the midpoint of the transition band."""
        chi = BumpProfile()
        np.testing.assert_allclose(chi((LOWER_CUT + UPPER_CUT) / 2.0), 0.5, atol=1e-14)

    @given(st.floats(min_value=-2.0, max_value=2.0))
    @settings(max_examples=60)
    def test_range(self, t):
        assert 0.0 <= BumpProfile()(t) <= 1.0

    def test_monotone(self):
        chi = BumpProfile()
        t = np.linspace(LOWER_CUT - 0.05, UPPER_CUT + 0.05, 400)
        vals = chi(t)
        assert np.all(np.diff(vals) >= -1e-15)

    def test_complementary_pair_sums_to_one(self):
        """chi(t) + mirrored chi(a+b-t) = 1 inside the band."""
        chi = BumpProfile()
        t = np.linspace(LOWER_CUT + 1e-6, UPPER_CUT - 1e-6, 57)
        np.testing.assert_allclose(chi(t) + chi(LOWER_CUT + UPPER_CUT - t), 1.0, atol=1e-12)

    def test_bad_cuts_rejected(self):
        with pytest.raises(ValueError):
            BumpProfile(lower=0.8, upper=0.5)


class TestLift:
    def test_zero_lifts_to_zero(self):
        f = lift_to_sphere(lambda x: np.zeros(x.shape[0]), k=1, d=1)
        u = random_sphere_points(1, 64)
        np.testing.assert_allclose(f(u), 0.0, atol=0.0)

    def test_constant_at_pole(self):
        """h = 1, k = 1: the lift at the pole e_{d+1} equals 1."""
        f = lift_to_sphere(lambda x: np.ones(x.shape[0]), k=1, d=2)
        np.testing.assert_allclose(f(np.array([[0.0, 0.0, 1.0]])), [1.0], atol=1e-15)

    def test_linear_target_on_cap(self):
        """d=1, h(x) = x, k = 1: on the cap cos(theta) >= 1/sqrt2 the lift is sin(theta)."""
        f = lift_to_sphere(lambda x: x[:, 0], k=1, d=1)
        theta = np.linspace(-math.pi / 4 + 1e-9, math.pi / 4 - 1e-9, 33)
        u = np.stack([np.sin(theta), np.cos(theta)], axis=1)
        np.testing.assert_allclose(f(u), np.sin(theta), atol=1e-13)

    def test_vanishes_below_inner_cut(self):
        for k in (0, 1, 2):
            f = lift_to_sphere(lambda x: 1.0 + x[:, 0] ** 2, k=k, d=1)
            theta = np.linspace(0, 2 * math.pi, 257)
            u = np.stack([np.sin(theta), np.cos(theta)], axis=1)
            dead = np.abs(u[:, 1]) <= LOWER_CUT
            np.testing.assert_allclose(f(u)[dead], 0.0, atol=0.0)

    def test_parity_rule(self):
        """Lift is antipodally odd for even k and even for odd k."""
        for d in (1, 2):
            for k in (0, 1, 2, 3):
                tgt = make_target("gauss_bump", d)
                f = lift_to_sphere(tgt, k)
                assert f.parity == parity_for_k(k)
                assert f.parity == ("odd" if k % 2 == 0 else "even")
                u = random_sphere_points(d, 500, seed=k + 10 * d)
                sign = -1.0 if f.parity == "odd" else 1.0
                np.testing.assert_allclose(f(-u), sign * f(u), atol=1e-12)

    def test_round_trip_identity(self):
        """S_k(lift h) = h exactly on the unit ball for every catalog target."""
        rng = np.random.default_rng(42)
        for d in (1, 2):
            x = ball_grid(d, 1000, seed=5)
            for name in ("abs", "holder_profile", "gauss_bump", "random_shallow", "weierstrass"):
                tgt = make_target(name, d, alpha=1.0, seed=3)
                hx = tgt(x)
                for k in (0, 1, 2):
                    lifted = lift_to_sphere(tgt, k)
                    back = apply_lowering(lifted, k, x)
                    np.testing.assert_allclose(back, hx, atol=1e-12, err_msg=f"{name} d={d} k={k}")

    def test_bare_callable_needs_dimension(self):
        with pytest.raises(ValueError):
            lift_to_sphere(lambda x: x[:, 0], k=1)


class TestLowering:
    def test_constant_k0(self):
        """k = 0: S_0 g = g on the lifted points, no radial factor."""
        g = SphereFunction(d=1, evaluator=lambda u: np.full(u.shape[0], 2.5))
        x = np.linspace(-1, 1, 11)[:, None]
        np.testing.assert_allclose(apply_lowering(g, 0, x), 2.5, atol=1e-15)

    def test_last_coordinate_k1(self):
        """g(u) = u_{d+1}, k = 1: S_1 g = 1 identically."""
        g = SphereFunction(d=2, evaluator=lambda u: u[:, -1])
        x = ball_grid(2, 64, seed=1)
        np.testing.assert_allclose(apply_lowering(g, 1, x), 1.0, atol=1e-14)

    def test_outside_ball_rejected(self):
        g = SphereFunction(d=1, evaluator=lambda u: u[:, 0])
        with pytest.raises(ValueError):
            apply_lowering(g, 1, np.array([[1.5]]))


class TestTargetCatalog:
    def test_names(self):
        with pytest.raises(ValueError):
            make_target("no_such_target", 1)

    def test_abs_profile(self):
        tgt = make_target("abs", 1)
        assert tgt.alpha == 1.0
        x = np.array([[0.5], [-0.5], [0.0]])
        np.testing.assert_allclose(tgt(x) * tgt.norm_scale, [0.5, 0.5, 0.0])

    def test_holder_profile_alpha(self):
        tgt = make_target("holder_profile", 2, alpha=1.5)
        assert tgt.alpha == 1.5
        assert tgt.class_tag == "holder"
        with pytest.raises(ValueError):
            make_target("holder_profile", 1, alpha=0.0)

    def test_gauss_bump_smooth(self):
        tgt = make_target("gauss_bump", 2)
        assert tgt.alpha == math.inf
        np.testing.assert_allclose(tgt(np.zeros((1, 2))), [1.0])

    def test_random_shallow_unit_variation(self):
        """random_shallow carries total outer weight exactly one."""
        for seed in (0, 1, 7):
            tgt = make_target("random_shallow", 1, seed=seed)
            assert tgt.class_tag == "variation"
            # reproducible across builds
            x = ball_grid(1, 32, seed=2)
            np.testing.assert_array_equal(tgt(x), make_target("random_shallow", 1, seed=seed)(x))

    def test_weierstrass_rough_everywhere(self):
        """Lacunary target oscillates at every scale but stays bounded after scaling."""
        tgt = make_target("weierstrass", 1, alpha=1.0)
        x = np.linspace(-1, 1, 4096)[:, None]
        vals = tgt(x)
        assert np.max(np.abs(vals)) <= 1.0 + 1e-9
        # sign changes of the increment process at fine scale indicate roughness
        incr = np.diff(vals)
        flips = np.sum(np.sign(incr[:-1]) * np.sign(incr[1:]) < 0)
        assert flips > 100

    def test_norm_scale_positive_and_deterministic(self):
        for name in ("abs", "holder_profile", "weierstrass"):
            a = make_target(name, 1, alpha=1.0, seed=0).norm_scale
            b = make_target(name, 1, alpha=1.0, seed=0).norm_scale
            assert a == b > 0

    def test_domain_guard(self):
        tgt = make_target("abs", 1)
        with pytest.raises(ValueError):
            tgt(np.array([[SUPPORT_RADIUS + 0.1]]))
        # inside the support radius is fine even outside the unit ball
        tgt(np.array([[SUPPORT_RADIUS - 1e-3]]))


class TestBallGrid:
    def test_inside_unit_ball(self):
        for d in (1, 2, 3):
            x = ball_grid(d, 500, seed=0)
            assert np.all(np.linalg.norm(x, axis=1) <= 1.0 + 1e-12)

    def test_radius_law(self):
        """Fraction of points within radius r tends to r^d."""
        for d in (1, 2):
            x = ball_grid(d, 20000, seed=3)
            r = np.linalg.norm(x, axis=1)
            for rr in (0.3, 0.6, 0.9):
                frac = np.mean(r <= rr)
                assert abs(frac - rr**d) < 0.02, (d, rr, frac)
