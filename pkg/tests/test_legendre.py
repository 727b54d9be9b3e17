import math

import numpy as np
import pytest

from volprod.core import LogDensity, body_to_logdensity, lp_ball, make_grid
from volprod.densities import exp_power, gaussian
from volprod.legendre import (
    convex_envelope,
    default_dual_grid,
    legendre_1d,
    legendre_transform,
    polar_density,
)
from volprod.oracles import brute_legendre
from volprod.quadrature import log_integral


def _random_density(rng, grid, with_inf=False):
    phi = np.cumsum(rng.normal(size=grid.points[0]))
    phi = phi - phi.min()
    if with_inf:
        phi[rng.random(grid.points[0]) < 0.2] = np.inf
        if not np.isfinite(phi).any():
            phi[0] = 0.0
    return LogDensity(grid, phi)


class TestLegendre1d:
    def test_quadratic_self_dual(self):
        g = make_grid(1, 8.0, 513)
        y = g.axis(0)
        out = legendre_1d(y, 0.5 * y**2, y)
        h = g.spacings[0]
        assert np.max(np.abs(out - 0.5 * y**2)) <= h**2 / 2 + 1e-12

    def test_absolute_value_conjugate(self):
        g = make_grid(1, 8.0, 513)
        y = g.axis(0)
        x = np.linspace(-1.0, 1.0, 9)
        out = legendre_1d(y, np.abs(y), x)
        # |x| <= 1 nodes of the dual: conjugate is exactly 0
        assert np.max(np.abs(out)) == 0.0

    def test_single_point_sup_is_affine(self):
        g = make_grid(1, 2.0, 5)
        phi = np.full(5, np.inf)
        phi[3] = 0.7  # y0 = 1.0
        x = np.array([-2.0, 0.0, 3.0])
        out = legendre_1d(g.axis(0), phi, x)
        assert np.array_equal(out, x * 1.0 - 0.7)

    def test_all_inf_rejected(self):
        with pytest.raises(ValueError):
            legendre_1d(np.array([0.0, 1.0]), np.array([np.inf, np.inf]), np.array([0.0]))

    def test_matches_brute_force_bitwise(self):
        rng = np.random.default_rng(42)
        g = make_grid(1, 4.0, 65)
        for i in range(50):
            f = _random_density(rng, g, with_inf=(i % 3 == 0))
            dual = default_dual_grid(f, 65)
            fast = legendre_transform(f, dual)
            brute = brute_legendre(f, dual)
            assert np.array_equal(fast.phi, brute.phi), f"input {i} deviates"


class TestLegendreTransformNd:
    def test_2d_quadratic_pair(self):
        g = make_grid(2, 6.0, 129)
        x1, x2 = g.meshgrid()
        phi = 0.5 * (x1**2 / 1.0 + x2**2 / 4.0)  # A = diag(1, 4) inverse form
        f = LogDensity(g, phi, even=True)
        dual = make_grid(2, 1.5, 65)
        out = legendre_transform(f, dual)
        d1, d2 = dual.meshgrid()
        target = 0.5 * (d1**2 + 4.0 * d2**2)
        h = max(g.spacings)
        assert np.max(np.abs(out.phi - target)) <= 4 * h**2

    def test_cube_diamond_duality(self):
        # (1/2 ||.||_{linf}^2)* = 1/2 ||.||_{l1}^2
        g = make_grid(2, 4.0, 129)
        f = body_to_logdensity(lp_ball(math.inf, 2), g)
        dual = make_grid(2, 2.0, 65)
        out = legendre_transform(f, dual)
        d = np.stack(dual.meshgrid(), axis=-1)
        target = 0.5 * lp_ball(1.0, 2).gauge(d) ** 2
        assert np.max(np.abs(out.phi - target)) <= 0.1  # O(h)

    def test_2d_matches_brute(self):
        rng = np.random.default_rng(3)
        g = make_grid(2, 3.0, 33)
        phi = rng.normal(size=(33, 33))
        f = LogDensity(g, phi)
        dual = make_grid(2, 2.0, 17)
        fast = legendre_transform(f, dual)
        brute = brute_legendre(f, dual)
        assert np.max(np.abs(fast.phi - brute.phi)) <= 1e-12

    def test_order_reversal(self):
        rng = np.random.default_rng(5)
        g = make_grid(1, 4.0, 65)
        f1 = _random_density(rng, g)
        f2 = LogDensity(g, f1.phi + rng.random(65))  # f2 >= f1 pointwise in phi
        dual = default_dual_grid(f1, 65)
        c1 = legendre_transform(f1, dual)
        c2 = legendre_transform(f2, dual)
        assert np.all(c1.phi >= c2.phi)

    def test_young_inequality(self):
        rng = np.random.default_rng(6)
        g = make_grid(1, 4.0, 65)
        f = _random_density(rng, g)
        dual = default_dual_grid(f, 65)
        conj = legendre_transform(f, dual)
        y = g.axis(0)[:, None]
        x = dual.axis(0)[None, :]
        lhs = f.phi[:, None] + conj.phi[None, :]
        assert np.all(lhs >= x * y - 1e-12)

    def test_evenness_preserved(self):
        g = make_grid(1, 8.0, 513)
        out = legendre_transform(exp_power(g, 4.0))
        assert out.even


class TestConvexEnvelope:
    def test_involution_on_convex(self):
        g = make_grid(1, 8.0, 513)
        phi = 0.5 * g.axis(0) ** 2
        f = LogDensity(g, phi, even=True)
        env = convex_envelope(f, make_grid(1, 10.0, 1025))
        assert np.max(np.abs(env.phi - phi)) <= 1e-12

    def test_double_well_envelope(self):
        g = make_grid(1, 2.0, 257)
        y = g.axis(0)
        f = LogDensity(g, (y**2 - 1.0) ** 2, even=True)
        env = convex_envelope(f)
        inside = np.abs(y) <= 1.0
        assert np.max(np.abs(env.phi[inside])) <= 1e-10
        assert np.all(env.phi <= (y**2 - 1.0) ** 2 + 1e-12)


class TestPolarDensity:
    def test_gaussian_polar_mass(self):
        g = make_grid(1, 8.0, 513)
        pol = polar_density(gaussian(g))
        assert log_integral(pol).value() == pytest.approx(2 * math.pi, rel=5e-3)

    def test_exp_abs_polar_is_indicator(self):
        g = make_grid(1, 8.0, 513)
        pol = polar_density(exp_power(g, 1.0))
        assert log_integral(pol).value() == pytest.approx(2.0, rel=1e-2)

    def test_scaled_gaussian_volume_product_invariance(self):
        # v(c gamma_A) = (2 pi)^n independent of c and A
        g = make_grid(1, 8.0, 513)
        from volprod.core import gaussian_to_logdensity, isotropic_gaussian

        for c in (0.5, 2.0):
            f = gaussian_to_logdensity(isotropic_gaussian(0.5, mass=c), g)
            v = log_integral(f).log_abs + log_integral(polar_density(f)).log_abs
            assert math.exp(v) == pytest.approx(2 * math.pi, rel=5e-3)

    def test_non_even_warns(self):
        g = make_grid(1, 4.0, 65)
        f = LogDensity(g, 0.5 * (g.axis(0) - 0.5) ** 2, even=False)
        with pytest.warns(UserWarning):
            polar_density(f)
