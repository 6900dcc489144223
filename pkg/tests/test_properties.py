"""Property tests for the stated invariants."""
import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from funcdiv import bodygeom as B
from funcdiv import divergence as D
from funcdiv import funcmodel as M
from funcdiv import generators as G
from funcdiv import quadrature as Q
from funcdiv import transforms as T
from funcdiv import verifier as V

SLOW = settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.too_slow])
FAST = settings(max_examples=60, deadline=None)

lams = st.floats(-3.0, 3.0).filter(lambda x: abs(x) > 1e-3)
ts = st.floats(1e-3, 1e3)


def generator_strategy():
    return st.one_of(lams.map(G.power), st.sampled_from([G.tlogt(), G.neglog(), G.log()]))


@FAST
@given(generator_strategy(), st.lists(ts, min_size=1, max_size=50))
def test_adjoint_involution(g, t):
    t = np.array(t)
    a, b = G.adjoint(G.adjoint(g))(t), g(t)
    assert np.all(np.abs(a - b) <= 1e-12 * np.maximum(1.0, np.abs(b)))


@FAST
@given(st.one_of(st.floats(1.0, 4.0), st.floats(-3.0, 0.0).filter(lambda x: x != 0)))
def test_adjoint_of_convex_power_is_convex(lam):
    ga = G.adjoint(G.power(lam))
    assert ga.is_convex
    t = np.linspace(0.05, 20, 400)
    f = ga(t)
    assert np.all(f[:-2] - 2 * f[1:-1] + f[2:] >= -1e-12 * np.maximum(1, np.abs(f[1:-1])))


def spd(draw, n):
    L = np.array(draw(st.lists(st.floats(-1, 1), min_size=n * n, max_size=n * n))).reshape(n, n)
    return L @ L.T + 0.3 * np.eye(n)


@st.composite
def gaussians(draw, dims=(1, 2)):
    n = draw(st.sampled_from(dims))
    A = spd(draw, n)
    C = draw(st.floats(0.5, 3.0))
    return M.gaussian(A, C)


@FAST
@given(gaussians(), st.integers(0, 2 ** 31))
def test_fd_matches_analytic_derivatives(phi, seed):
    X = np.random.default_rng(seed).uniform(-2, 2, (50, phi.dim))
    psi = phi.potential
    g, h = psi.grad(X), psi.hess(X)
    assert np.max(np.abs(g - psi.fd_gradient(X))) <= 1e-6 * max(1.0, np.max(np.abs(g)))
    assert np.max(np.abs(h - psi.fd_hessian(X))) <= 1e-6 * max(1.0, np.max(np.abs(h)))


@FAST
@given(st.floats(0.02, 1.0), st.lists(st.floats(-6, 6), min_size=1, max_size=30))
def test_s_approximation_below_function(s, xs):
    phi = M.cosh_potential(1)
    X = np.array(xs)[:, None]
    assert np.all(M.s_approximation(phi, s)(X) <= phi(X) + 1e-15)


@FAST
@given(gaussians(), st.integers(0, 2 ** 31))
def test_fenchel_young_and_dual_maps(phi, seed):
    rng = np.random.default_rng(seed)
    psi = phi.potential
    L = T.legendre(psi)
    X = rng.uniform(-2, 2, (10, phi.dim))
    Y = rng.uniform(-2, 2, (10, phi.dim))
    assert np.all(psi.value(X) + L.value(Y) - np.einsum("ni,ni->n", X, Y) >= -1e-8)
    G_ = psi.grad(X)
    assert np.allclose(psi.value(X) + L.value(G_), np.einsum("ni,ni->n", X, G_), atol=1e-8)
    assert np.allclose(L.grad(G_), X, atol=1e-6)
    prod = np.einsum("nij,njk->nik", psi.hess(L.grad(Y)), L.hess(Y))
    assert np.allclose(prod, np.eye(phi.dim), atol=1e-5)


@FAST
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=10), st.lists(st.floats(-1.5, 1.5), min_size=1, max_size=10))
def test_fenchel_young_for_cosh(xs, ys):
    psi = M.cosh_potential(1).potential
    L = T.legendre(psi)
    X, Y = np.array(xs)[:, None], np.array(ys)[:, None]
    lhs = psi.value(X)[:, None] + L.value(Y)[None, :]
    assert np.all(lhs - X * Y.T >= -1e-8)


@SLOW
@given(gaussians(), st.sampled_from([G.tlogt(), G.neglog(), G.power(0.3), G.power(2.0)]))
def test_gaussian_closed_form_property(phi, g):
    assert V.check_gaussian_closed_form(g, phi).passed


@SLOW
@given(gaussians(), st.sampled_from([G.tlogt(), G.power(0.3), G.power(2.0), G.power(-0.5)]))
def test_star_duality_by_swap(phi, g):
    a = D.df_log_concave(g, phi, swap=True).value
    b = D.df_log_concave(G.adjoint(g), phi).value
    assert abs(a - b) <= 1e-8 * max(1.0, abs(b))


@st.composite
def radial_subjects(draw):
    c1 = draw(st.floats(0.2, 2.0))
    c2 = draw(st.floats(0.0, 0.5))
    return M.radial_polynomial([0.0, c1, c2], 1)


@SLOW
@given(radial_subjects(), st.sampled_from([G.tlogt(), G.power(2.0), G.neglog(), G.power(0.3), G.power(0.5)]))
def test_jensen_on_random_radial_potentials(phi, g):
    assert V.check_jensen_bound(g, phi).passed


@SLOW
@given(radial_subjects(), st.floats(0.1, 0.9))
def test_as_duality_on_random_radial_potentials(phi, lam):
    assert V.check_as_duality(phi, lam).passed


@SLOW
@given(radial_subjects(), st.floats(0.05, 0.45), st.floats(1.0, 3.0))
def test_monotonicity_random_triples(phi, lam_frac, alpha):
    # beta = 0 < lambda < alpha
    lam = lam_frac * alpha
    assert V.check_monotonicity(phi, "i", (alpha, 0.0, lam)).passed
    assert V.check_monotonicity(phi, "iii", (0.0, lam)).passed


@st.composite
def unimodular_symmetric(draw):
    a = draw(st.floats(0.4, 2.5))
    th = draw(st.floats(0, math.pi))
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    return R @ np.diag([a, 1 / a]) @ R.T


@SLOW
@given(unimodular_symmetric(), st.sampled_from([G.tlogt(), G.power(0.3)]))
def test_affine_invariance_property(Tm, g):
    assert V.check_invariance(g, M.quartic_potential(1.0, 2), Tm).passed


@SLOW
@given(st.floats(1.1, 5.0), st.sampled_from([G.tlogt(), G.power(0.3), G.power(2.0)]))
def test_valuation_on_nested_pairs(c, g):
    phi = M.cosh_potential(1)
    rep = V.check_valuation(g, phi, phi.scaled_value(c))
    assert rep.passed and abs(rep.margin) <= 1e-10


@SLOW
@given(st.floats(1.0, 3.0), st.floats(0.4, 1.0), st.sampled_from([G.tlogt(), G.power(2.0), G.neglog()]))
def test_body_jensen_equality_on_ellipses(a, b, g):
    rep = V.check_body_jensen(g, B.ellipsoid(a, b))
    assert rep.passed
    assert abs(rep.margin) <= 1e-5 * max(1.0, abs(rep.lhs))


@SLOW
@given(st.floats(0.0, 0.9), st.integers(2, 5), st.sampled_from([G.tlogt(), G.power(2.0), G.power(0.5)]))
def test_body_jensen_and_duality_on_perturbed_discs(frac, k, g):
    # the radial curve 1 + eps cos(k t) has positive curvature iff eps < 1 / (k^2 + 1)
    K = B.perturbed_ball(frac / (k * k + 1), k)
    assert V.check_body_jensen(g, K).passed
    assert V.check_body_duality(g, K).passed


@SLOW
@given(st.integers(0, 10_000), st.sampled_from([1, 2]))
def test_gauss_hermite_orders_agree(seed, dim):
    eta = V.random_even_eta(seed, dim)
    lo, hi = V.gaussian_moments(eta, 32), V.gaussian_moments(eta, 48)
    for k in hi:
        assert abs(lo[k] - hi[k]) <= 1e-8 * max(1.0, abs(hi[k]))


@SLOW
@given(st.integers(0, 10_000), st.sampled_from([1, 2]), st.sampled_from(V.LINEARIZATION_VARIANTS))
def test_linearization_random_even(seed, dim, variant):
    assert V.check_linearization(V.random_even_eta(seed, dim), variant).passed


@FAST
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5), st.floats(-2, 0), st.floats(0.1, 2))
def test_box_quadrature_exact_on_polynomials(coeffs, lo, width):
    p = np.polynomial.Polynomial(coeffs)
    hi = lo + width
    r = Q.integrate(lambda X: p(X[:, 0]), Q.Box((lo,), (hi,)))
    P = p.integ()
    assert abs(r.value - (P(hi) - P(lo))) <= 1e-10 * max(1.0, abs(P(hi) - P(lo)))


@SLOW
@given(st.floats(1e-8, 1e-5))
def test_finer_tolerance_stays_within_error_estimate(tol):
    f = lambda X: np.exp(-X[:, 0] ** 2 - 0.5 * X[:, 1] ** 2) * (1 + 0.3 * np.cos(2 * X[:, 0]))
    box = Q.Box((-7.0, -9.0), (7.0, 9.0))
    a = Q.integrate(f, box, tol)
    b = Q.integrate(f, box, tol / 100)
    assert abs(a.value - b.value) <= 2 * a.error_estimate + 1e-14
