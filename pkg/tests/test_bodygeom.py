import math

import numpy as np
import pytest

from funcdiv import bodygeom as B
from funcdiv import divergence as D
from funcdiv import funcmodel as M
from funcdiv import generators as G


def directions(m=12, offset=0.1):
    th = offset + 2 * math.pi * np.arange(m) / m
    return np.stack([np.cos(th), np.sin(th)], 1)


def test_ball_geometry():
    geo = B.boundary_geometry(B.ball(1.0), directions())
    assert np.allclose(geo.kappa, 1.0) and np.allclose(geo.support, 1.0)
    geo = B.boundary_geometry(B.ball(2.0), directions())
    assert np.allclose(geo.kappa, 0.5) and np.allclose(geo.support, 2.0)


def test_ellipse_curvature_at_axis_ends():
    # parametric oracle: kappa = ab / (a^2 sin^2 t + b^2 cos^2 t)^{3/2}
    K = B.ellipsoid(2.0, 1.0)
    geo = B.boundary_geometry(K, np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert np.allclose(geo.x, [[2.0, 0.0], [0.0, 1.0]])
    assert np.allclose(geo.kappa, [2.0 / 1.0 ** 1.5, 2.0 / 4.0 ** 1.5], rtol=1e-12)
    # det Hess(|x|_K^2 / 2) at (2, 0) is 1 / (a^2 b^2)
    assert geo.hess_det[0] == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize("K", [B.ball(1.5), B.ellipsoid(2.0, 1.0), B.lp_smooth(8.0), B.perturbed_ball(0.05, 3)],
                         ids=lambda K: K.name)
def test_curvature_identity_against_parametric_oracle(K):
    U = directions(50, 0.013)
    geo = B.boundary_geometry(K, U)
    oracle = K.oracle_curvature(U)
    assert np.allclose(geo.kappa, oracle, rtol=1e-4)
    assert np.allclose(geo.hess_det, geo.kappa / geo.support ** 3, rtol=1e-10)


def test_surface_jacobian_matches_finite_differences():
    K = B.lp_smooth(8.0)
    th = np.linspace(0.05, 2 * math.pi, 17)
    geo = B.boundary_geometry(K, np.stack([np.cos(th), np.sin(th)], 1))
    assert np.allclose(geo.surface_jacobian, K.surface_jacobian_fd(th), rtol=1e-7)


def test_volumes():
    assert B.volume(B.ball(1.0)).value == pytest.approx(math.pi, rel=1e-12)
    assert B.volume(B.ellipsoid(2.0, 1.0)).value == pytest.approx(2 * math.pi, rel=1e-12)
    assert B.volume(B.ball(1.0, 3)).value == pytest.approx(4 * math.pi / 3, rel=1e-9)


def test_smoothed_l8_area_against_grid_count():
    K = B.lp_smooth(8.0)
    m = 2000
    t = (np.arange(m) + 0.5) / m * 2.4 - 1.2
    X, Y = np.meshgrid(t, t)
    P = np.stack([X.ravel(), Y.ravel()], 1)
    count = np.count_nonzero(K.gauge.value(P) < 1) * (2.4 / m) ** 2
    assert B.volume(K).value == pytest.approx(count, rel=1e-3)


def test_polar_of_ball_and_ellipse():
    U = directions()
    assert np.allclose(B.polar_body(B.ball(1.0)).radial(U), 1.0, rtol=1e-9)
    P = B.polar_body(B.ellipsoid(2.0, 1.0))
    ref = B.ellipsoid(0.5, 1.0)
    assert np.allclose(P.radial(U), ref.radial(U), rtol=1e-9)
    assert B.volume(P).value == pytest.approx(math.pi / 2, rel=1e-8)


def test_polar_of_l8_is_l8_over_7():
    K = B.lp_smooth(8.0, eps=0.0)
    P = B.polar_body(K)
    X = np.random.default_rng(0).normal(size=(20, 2))
    dual = np.sum(np.abs(X) ** (8 / 7), 1) ** (7 / 8)
    assert np.allclose(P.gauge.value(X), dual, rtol=1e-9)


def test_polar_gauge_derivatives():
    P = B.polar_body(B.lp_smooth(8.0))
    X = directions(9, 0.3) * 0.8
    assert np.allclose(P.gauge.grad(X), P.gauge.fd_gradient(X), rtol=1e-6, atol=1e-8)
    assert np.allclose(P.gauge.hess(X), P.gauge.fd_hessian(X), rtol=1e-4, atol=1e-6)


@pytest.mark.parametrize("g", [G.power(0.0), G.power(1.0), G.power(2.0), G.tlogt()], ids=lambda g: g.name)
def test_df_of_unit_disc(g):
    assert B.df_body(g, B.ball(1.0)).value == pytest.approx(float(g(np.array([1.0]))[0]) * 2 * math.pi, abs=1e-10)


def test_df_of_scaled_disc():
    # constant ratio kappa / h^3 = r^-4 on a circle of length 2 pi r with weight h = r
    for r in (0.5, 2.0):
        want = 2 * math.pi * r ** 2 * r ** -4
        assert B.df_body(G.power(1.0), B.ball(r)).value == pytest.approx(want, rel=1e-10)
    # f = id is n |K polar|
    assert B.df_body(G.power(1.0), B.ball(2.0)).value == pytest.approx(2 * math.pi / 4, rel=1e-10)


def test_df_of_ellipse_is_twice_polar_area():
    assert B.df_body(G.power(1.0), B.ellipsoid(2.0, 1.0)).value == pytest.approx(math.pi, rel=1e-9)


def test_body_to_function():
    std = B.body_to_function(B.ball(1.0))
    X = directions() * 1.7
    assert np.allclose(std(X), np.exp(-np.sum(X ** 2, 1) / 2))
    assert B.body_to_function(B.ellipsoid(2.0, 1.0)).integral(1e-10).value == pytest.approx(4 * math.pi, rel=1e-8)


def test_bridge_factor_on_ellipse():
    K = B.ellipsoid(2.0, 1.0)
    g = G.power(0.5)
    factor = (2 * math.pi) / (2 * B.unit_ball_volume(2))
    lhs = D.df(g, B.body_to_function(K)).value
    assert lhs == pytest.approx(factor * B.df_body(g, K).value, rel=1e-4)


def test_lift_of_half_circle_is_disc():
    L = B.lift_body(M.half_circle())
    U = directions()
    assert np.allclose(L.radial(U), 1.0, rtol=1e-10)
    assert B.lift_factor(1.0, 1) == 2.0
    for g in (G.power(0.0), G.power(2.0)):
        f1 = float(g(np.array([1.0]))[0])
        assert B.df_body(g, L).value == pytest.approx(2 * math.pi * f1, rel=1e-9)
        assert D.df(g, M.half_circle()).value == pytest.approx(math.pi * f1, rel=1e-6)


def test_lift_of_parabola():
    L = B.lift_body(M.s_ball(1.0))
    assert B.df_body(G.power(0.0), L).value == pytest.approx(16 / 3, rel=1e-9)
    assert D.df(G.power(0.0), M.s_ball(1.0)).value == pytest.approx(8 / 3, rel=1e-8)


def test_lift_gauge_derivatives():
    L = B.lift_body(M.s_ball(1.0))
    X = directions(7, 0.2) * 0.6
    assert np.allclose(L.gauge.grad(X), L.gauge.fd_gradient(X), rtol=1e-6, atol=1e-8)
    assert np.allclose(L.gauge.hess(X), L.gauge.fd_hessian(X), rtol=1e-4, atol=1e-6)


def test_jensen_equality_for_ellipses():
    K = B.ellipsoid(2.0, 1.0)
    ratio = B.volume(B.polar_body(K)).value / B.volume(K).value
    for g in (G.tlogt(), G.power(2.0)):
        rhs = 2 * 2 * math.pi * float(g(np.array([ratio]))[0])
        assert B.df_body(g, K).value == pytest.approx(rhs, rel=1e-5, abs=1e-9)
