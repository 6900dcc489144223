import math

import numpy as np
import pytest

from funcdiv import funcmodel as M


def test_quadratic_potential_derivatives(rng):
    phi = M.standard_gaussian(3)
    X = rng.normal(size=(5, 3))
    assert np.allclose(M.differentiate(phi.potential, X, "gradient"), X)
    assert np.allclose(M.differentiate(phi.potential, X, "hessian"), np.eye(3))


def test_cosh_derivatives_at_one():
    psi = M.cosh_potential(1).potential
    # differentiate is the finite-difference route; the analytic one is exact
    assert M.differentiate(psi, [1.0], "gradient")[0] == pytest.approx(math.sinh(1.0), rel=1e-9)
    assert M.differentiate(psi, [1.0], "hessian")[0, 0] == pytest.approx(math.cosh(1.0), rel=1e-6)
    assert psi.grad(np.array([[1.0]]))[0, 0] == pytest.approx(math.sinh(1.0), rel=1e-14)
    assert psi.hess(np.array([[1.0]]))[0, 0, 0] == pytest.approx(math.cosh(1.0), rel=1e-14)
    assert math.sinh(1.0) == pytest.approx(1.1752, abs=1e-4)


def test_anisotropic_quadratic_derivatives():
    psi = M.gaussian(np.diag([1.0, 2.0])).potential
    assert np.allclose(M.differentiate(psi, [1.0, 1.0], "gradient"), [2.0, 4.0], atol=1e-8)
    assert np.allclose(M.differentiate(psi, [1.0, 1.0], "hessian"), np.diag([2.0, 4.0]), atol=1e-6)


@pytest.mark.parametrize("phi", [M.standard_gaussian(2), M.gaussian([[1.0, 0.3], [0.3, 0.5]]),
                                 M.cosh_potential(1), M.cosh_potential(2),
                                 M.quartic_potential(1.0, 2), M.radial_polynomial([0.5, 0.1], 2)],
                         ids=lambda p: p.name)
def test_analytic_and_finite_difference_derivatives_agree(phi, rng):
    X = rng.uniform(-1.5, 1.5, (50, phi.dim))
    psi = phi.potential
    g, fg = psi.grad(X), psi.fd_gradient(X)
    h, fh = psi.hess(X), psi.fd_hessian(X)
    assert np.max(np.abs(g - fg)) <= 1e-6 * max(1.0, np.max(np.abs(g)))
    assert np.max(np.abs(h - fh)) <= 1e-6 * max(1.0, np.max(np.abs(h)))


def test_s_potential_of_ball_family():
    for s in (1.0, 0.5, 0.25):
        psi = M.s_potential(M.s_ball(s, 2))
        X = np.array([[0.3, 0.1], [0.0, 0.7]])
        assert np.allclose(psi.value(X), np.sum(X ** 2, 1) / s, rtol=1e-13)


def test_s_potential_of_constant():
    c, s = 0.6, 0.5
    phi = M.s_concave_from_phi(lambda P: np.full(len(P), c), lambda P: np.zeros_like(P),
                               lambda P: np.zeros((len(P), 1, 1)), s, M.Interval(-1, 1), "const")
    assert np.allclose(M.s_potential(phi).value(np.array([[0.2], [-0.5]])), (1 - c ** s) / s)


def test_s_approximation_values():
    g = M.standard_gaussian(1)
    one = M.s_approximation(g, 1.0)
    X = np.array([[0.0], [1.0], [1.3]])
    assert np.allclose(one(X), np.maximum(1 - X[:, 0] ** 2 / 2, 0))
    assert one.support.radial(np.array([[1.0]]))[0] == pytest.approx(math.sqrt(2), rel=1e-10)
    assert M.s_approximation(g, 0.1)(np.array([[1.0]]))[0] == pytest.approx(0.95 ** 10, rel=1e-12)
    assert 0.95 ** 10 == pytest.approx(0.5987, abs=1e-4)


def test_s_approximation_is_one_where_phi_is_one():
    g = M.standard_gaussian(2)
    for s in (0.1, 0.5, 1.0):
        assert M.s_approximation(g, s)(np.zeros((1, 2)))[0] == pytest.approx(1.0)


def test_s_approximation_increases_to_the_function():
    g = M.cosh_potential(1)
    X = np.linspace(-4, 4, 161)[:, None]
    target = g(X)
    sups = []
    for s in (0.2, 0.1, 0.05):
        v = M.s_approximation(g, s)(X)
        assert np.all(v <= target + 1e-15)
        sups.append(np.max(np.abs(v - target)))
    assert sups[0] > sups[1] > sups[2]


def test_bounded_support_integration():
    from scipy.integrate import dblquad, quad
    g = M.gaussian(1.0)
    phi = M.LogConcaveFn(g.potential, M.Interval(-0.5, 1.0), "truncated")
    assert phi.integral().value == pytest.approx(quad(lambda x: math.exp(-x * x), -0.5, 1.0)[0], rel=1e-10)
    box = M.LogConcaveFn(M.gaussian(np.eye(2)).potential, M.BoxSupport([-0.5, -1.0], [1.0, 0.3]), "box")
    ref = dblquad(lambda y, x: math.exp(-x * x - y * y), -0.5, 1.0, -1.0, 0.3)[0]
    assert box.integral().value == pytest.approx(ref, rel=1e-10)


def test_validate_rejects_nonconvex_potential():
    bad = M.ScalarField(1, lambda P: -P[:, 0] ** 2 + P[:, 0] ** 4 / 10, name="w")
    with pytest.raises(ValueError):
        M.LogConcaveFn(bad, name="w").validate()
