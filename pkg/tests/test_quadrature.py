import math

import numpy as np
import pytest

from funcdiv import bodygeom as B
from funcdiv import quadrature as Q


def test_unit_interval_polynomial():
    r = Q.integrate(lambda X: X[:, 0] ** 2, Q.Box((0.0,), (1.0,)))
    assert r.converged
    assert r.value == pytest.approx(1 / 3, rel=1e-13)


def test_gaussian_line_integral():
    r = Q.integrate(lambda X: np.exp(-X[:, 0] ** 2 / 2), Q.Box((-40.0,), (40.0,)), tol=1e-10)
    assert abs(r.value - math.sqrt(2 * math.pi)) <= 1e-8


def test_anisotropic_gaussian_plane():
    r = Q.integrate(lambda X: np.exp(-X[:, 0] ** 2 - 2 * X[:, 1] ** 2), Q.ball(12.0, None, 2), tol=1e-10)
    assert r.value == pytest.approx(math.pi / math.sqrt(2), rel=1e-8)


def test_error_estimate_is_honest():
    # doubling the work never moves a converged value by more than twice its error estimate
    f = lambda X: np.exp(-X[:, 0] ** 2) * np.cos(3 * X[:, 1]) ** 2
    box = Q.Box((-6.0, -2.0), (6.0, 2.0))
    coarse = Q.integrate(f, box, tol=1e-6)
    fine = Q.integrate(f, box, tol=1e-11)
    assert coarse.converged and fine.converged
    assert abs(coarse.value - fine.value) <= 2 * coarse.error_estimate + 1e-12


def test_gauss_hermite_moments():
    assert Q.integrate_gaussian(lambda X: np.ones(len(X)), 1) == pytest.approx(1.0, abs=1e-14)
    assert Q.integrate_gaussian(lambda X: X[:, 0] ** 4, 1) == pytest.approx(3.0, abs=1e-12)
    assert Q.integrate_gaussian(lambda X: (X[:, 0] ** 2 + X[:, 1] ** 2) ** 2, 2) == pytest.approx(8.0, abs=1e-12)


def test_gauss_hermite_orders_agree_on_smooth_integrand():
    g = lambda X: np.cos(X[:, 0]) * np.exp(-0.1 * X[:, 0] ** 2)
    assert abs(Q.integrate_gaussian(g, 1, 32) - Q.integrate_gaussian(g, 1, 48)) <= 1e-8


def test_boundary_perimeters():
    one = lambda X: np.ones(len(X))
    assert Q.integrate_boundary(B.ball(1.0), one).value == pytest.approx(2 * math.pi, rel=1e-12)
    assert Q.integrate_boundary(B.ball(3.0), one).value == pytest.approx(6 * math.pi, rel=1e-12)
    # complete elliptic integral of the second kind, scipy independent
    from scipy.special import ellipe
    per = 4 * 2.0 * ellipe(1 - 0.25)
    assert per == pytest.approx(9.6884, abs=1e-4)
    assert Q.integrate_boundary(B.ellipsoid(2.0, 1.0), one).value == pytest.approx(per, rel=1e-9)


def test_sphere_area_in_three_dimensions():
    r = Q.integrate_sphere(lambda U: np.ones(len(U)), 3)
    assert r.value == pytest.approx(4 * math.pi, rel=1e-10)


def test_monte_carlo_is_reproducible():
    sampler = lambda rng, m: rng.uniform(-1, 1, (m, 2))
    a = Q.monte_carlo(lambda X: (np.sum(X ** 2, 1) < 1).astype(float), sampler, 4.0, 20000, seed=3)
    b = Q.monte_carlo(lambda X: (np.sum(X ** 2, 1) < 1).astype(float), sampler, 4.0, 20000, seed=3)
    assert a == b
    assert abs(a[0] - math.pi) < 5 * a[1]
