import math

import numpy as np
import pytest
from scipy import integrate as si

from funcdiv import divergence as D
from funcdiv import funcmodel as M
from funcdiv import generators as G
from funcdiv import transforms as T

SQPI = math.sqrt(math.pi)


def closed_form(f, n, detA, C):
    r = 2 ** n * detA / C ** 2
    return float(f(np.array([r]))[0]) * C * math.pi ** (n / 2) / math.sqrt(detA)


@pytest.mark.parametrize("A,C", [(0.5, 1.0), (1.0, 2.0), (np.diag([1.0, 2.0]), 1.0), (np.diag([0.5, 0.5]), 2.0)])
@pytest.mark.parametrize("g", [G.tlogt(), G.neglog(), G.power(0.3), G.power(2.0)], ids=lambda g: g.name)
def test_gaussian_closed_form(A, C, g):
    A = np.atleast_2d(A)
    phi = M.gaussian(A, C)
    want = closed_form(g, A.shape[0], np.linalg.det(A), C)
    got = D.df(g, phi, tol=1e-10).value
    assert abs(got - want) <= 1e-6 * max(1.0, abs(want))


def test_gaussian_with_unit_ratio_vanishes_for_tlogt():
    assert abs(D.df(G.tlogt(), M.gaussian(0.5)).value) <= 1e-12


def test_constant_generator_gives_mass():
    assert D.df(G.power(0.0), M.standard_gaussian(1)).value == pytest.approx(math.sqrt(2 * math.pi), rel=1e-9)
    q = M.quartic_potential(1.0, 1)
    assert D.df(G.power(0.0), q).value == pytest.approx(q.integral().value, rel=1e-8)


def test_identity_generator_gives_polar_mass():
    assert D.df(G.power(1.0), M.standard_gaussian(2)).value == pytest.approx(2 * math.pi, rel=1e-9)
    for phi in (M.cosh_potential(1), M.quartic_potential(1.0, 1)):
        assert D.df(G.power(1.0), phi).value == pytest.approx(T.polar_dual(phi).integral().value, rel=1e-8)


def test_cosh_half_power_matches_dual_route():
    phi = M.cosh_potential(1)
    g = G.power(0.5)
    direct = D.df(g, phi).value
    dual = D.df(G.adjoint(g), T.polar_dual(phi)).value
    assert direct == pytest.approx(dual, rel=1e-4)


def test_star_duality_by_swapping_densities():
    for phi in (M.gaussian(np.diag([1.0, 2.0])), M.gaussian(0.7, 1.5), M.cosh_potential(1)):
        for g in (G.tlogt(), G.power(0.3), G.power(2.0)):
            a = D.df_log_concave(g, phi, swap=True).value
            b = D.df_log_concave(G.adjoint(g), phi).value
            assert a == pytest.approx(b, rel=1e-9)


def test_s_ball_identity_and_constant_generators():
    sb = M.s_ball(1.0)
    # Q = 1 + x^2 and P = 2/(1+x^2)^2 on (-1, 1)
    assert D.df(G.power(0.0), sb).value == pytest.approx(8 / 3, rel=1e-8)
    assert si.quad(lambda x: 2 / (1 + x * x) ** 2, -1, 1)[0] == pytest.approx(1 + math.pi / 2, rel=1e-12)
    assert D.df(G.power(1.0), sb).value == pytest.approx(1 + math.pi / 2, rel=1e-8)


def test_s_ball_half_square_against_scipy():
    sb = M.s_ball(1.0)
    ref = si.quad(lambda x: (2 / (1 + x * x) ** 3) ** 2 * (1 + x * x), -1, 1)[0]
    assert D.df(G.power(2.0), sb).value == pytest.approx(ref, rel=1e-6)


def test_s_approximations_approach_log_concave_value():
    phi = M.standard_gaussian(1)
    g = G.power(1.0)
    target = D.df(g, phi).value
    errs = [abs(D.df(g, M.s_approximation(phi, s)).value - target) for s in (0.2, 0.1, 0.05)]
    assert errs[0] > errs[1] > errs[2]


def test_kl_of_gaussian():
    assert abs(D.kl_divergence(M.standard_gaussian(2)).value) <= 1e-10
    kl = D.kl_divergence(M.gaussian(1.0)).value
    assert kl == pytest.approx(2 * SQPI * math.log(2), rel=1e-9)
    assert 2 * SQPI * math.log(2) == pytest.approx(2.45714, abs=1e-5)


def test_kl_is_tlogt_divergence():
    for phi in (M.cosh_potential(1), M.quartic_potential(1.0, 1)):
        assert D.kl_divergence(phi).value == pytest.approx(D.df(G.tlogt(), phi).value, rel=1e-10)


def test_log_divergence_of_gaussian():
    # integral of phi ln(P/Q); the ratio is constant 2 for e^{-x^2}
    assert D.log_divergence(M.gaussian(1.0)).value == pytest.approx(SQPI * math.log(2), rel=1e-9)


def test_affine_surface_areas():
    assert D.affine_surface_area(M.gaussian(1.0), 0.5).value == pytest.approx(math.sqrt(2) * SQPI, rel=1e-9)
    assert D.affine_surface_area(M.standard_gaussian(2), 0.0).value == pytest.approx(2 * math.pi, rel=1e-9)
    assert D.affine_surface_area(M.gaussian(1.0), 1.0).value == pytest.approx(math.sqrt(4 * math.pi), rel=1e-9)


def test_extreme_affine_surface_areas():
    std = M.standard_gaussian(2)
    assert D.as_extreme(std, math.inf).value == pytest.approx(1.0, abs=1e-9)
    assert D.as_extreme(std, -math.inf).value == pytest.approx(1.0, abs=1e-9)
    assert D.as_extreme(M.gaussian(np.diag([1.0, 2.0])), math.inf).value == pytest.approx(8.0, rel=1e-9)
    c = M.cosh_potential(1)
    prod = D.as_extreme(c, math.inf).value * D.as_extreme(c, -math.inf).value
    assert prod == pytest.approx(1.0, abs=1e-8)


def test_omega_values():
    assert D.omega(M.standard_gaussian(1)).value == pytest.approx(1.0, abs=1e-6)
    # exp of the log-divergence per unit mass: ratio 2 everywhere
    assert D.omega(M.gaussian(1.0)).value == pytest.approx(2.0, rel=1e-8)
    c = M.cosh_potential(1)
    prod = D.omega(c).value * D.omega(T.polar_dual(c)).value
    assert prod <= 1 + 1e-6


def test_entropy_values():
    assert D.entropy(M.gaussian(0.5)).value == pytest.approx(-math.sqrt(2 * math.pi) / 2, rel=1e-9)
    assert -math.sqrt(2 * math.pi) / 2 == pytest.approx(-1.2533, abs=1e-4)
    flat = M.ScalarField(1, lambda P: np.zeros(len(P)), lambda P: np.zeros_like(P),
                         lambda P: np.zeros((len(P), 1, 1)), name="0")
    box = M.LogConcaveFn(flat, M.BoxSupport([0.0], [1.0]), "flat", minimizer=[0.5])
    assert abs(D.entropy(box).value) <= 1e-14


@pytest.mark.parametrize("phi", [M.gaussian(1.0), M.gaussian(np.diag([1.0, 2.0]), 2.0), M.standard_gaussian(2)],
                         ids=lambda p: p.name)
def test_entropy_identity_on_gaussians(phi):
    n = phi.dim
    X = np.zeros((1, n))
    ldet = math.log(np.linalg.det(phi.potential.hess(X)[0]))
    mass = phi.integral().value
    rhs = -2 * D.entropy(phi).value - n * mass + mass * ldet
    assert D.log_divergence(phi).value == pytest.approx(rhs, abs=1e-6 * max(1.0, abs(rhs)))


def test_center_of_mass():
    assert np.allclose(D.center_of_mass(M.cosh_potential(1).translate([0.4])), [-0.4], atol=1e-9)


def test_divergent_integral_reports_infinity():
    # P/Q -> 0 in the tails of cosh, so Q f(P/Q) = Q^2/P grows without bound for f = 1/t
    r = D.df(G.power(-1.0), M.cosh_potential(1))
    assert r.value == math.inf
    assert "divergent" in r.diagnostics
    assert math.isfinite(D.df(G.power(-1.0), M.standard_gaussian(1)).value)
