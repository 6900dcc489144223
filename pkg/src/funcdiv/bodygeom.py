"""Convex bodies given by gauge functions: boundary geometry, polar bodies,
boundary f-divergences, volumes, and the passage to log-concave functions.

Bodies contain the origin in their interior.  The boundary is charted by the
radial map u -> u / g(u) from the unit sphere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import quadrature as quad
from .funcmodel import LogConcaveFn, ScalarField, SConcaveFn, as_points, unit_directions
from .generators import Generator
from .quadrature import IntegralResult

SPHERE_SAMPLES = {2: 2048, 3: 10000}


@dataclass
class BoundaryGeometry:
    x: np.ndarray          # boundary points
    normal: np.ndarray     # outer unit normals
    kappa: np.ndarray      # Gauss curvature
    support: np.ndarray    # <x, N>
    rho: np.ndarray        # radial function at u
    hess_det: np.ndarray   # det Hess(g^2/2) at x
    surface_jacobian: np.ndarray  # d(surface measure) / d(sphere measure)


def _outer(a, b):
    return np.einsum("ni,nj->nij", a, b)


class ConvexBody:
    """A convex body through its gauge g (1-homogeneous, C^2 off the origin).

    ``oracle_curvature(U)`` optionally gives the curvature at the boundary
    point in direction U by an independent formula (used by the verifier).
    """

    def __init__(self, gauge: ScalarField, name: str = "", angle_breakpoints: Sequence[float] = (),
                 oracle_curvature: Optional[Callable] = None, params: Optional[dict] = None):
        self.gauge = gauge
        self.dim = gauge.dim
        self.name = name or gauge.name
        self.angle_breakpoints = tuple(angle_breakpoints)
        self.oracle_curvature = oracle_curvature
        self.params = dict(params or {})
        self._volume = None

    def __repr__(self):
        return f"ConvexBody({self.name}, n={self.dim})"

    def radial(self, U) -> np.ndarray:
        return 1.0 / self.gauge.value(U)

    @property
    def psi(self) -> ScalarField:
        """g^2 / 2 with derivatives g grad g and grad g grad g^T + g Hess g."""
        g = self.gauge
        return ScalarField(
            self.dim,
            lambda P: 0.5 * g.value(P) ** 2,
            lambda P: g.value(P)[:, None] * g.grad(P),
            lambda P: _outer(g.grad(P), g.grad(P)) + g.value(P)[:, None, None] * g.hess(P),
            None, f"psi[{self.name}]")

    def boundary_point(self, U):
        U = np.asarray(U, float)
        return U / self.gauge.value(U)[:, None]

    def boundary_geometry(self, U) -> BoundaryGeometry:
        U, _ = as_points(U, self.dim)
        U = U / np.linalg.norm(U, axis=1, keepdims=True)
        n = self.dim
        gu = self.gauge.value(U)
        rho = 1.0 / gu
        X = U * rho[:, None]
        G = self.gauge.grad(X)
        gn = np.linalg.norm(G, axis=1)
        N = G / gn[:, None]
        hx = 1.0 / gn  # <x, N> = g(x) / |grad g(x)| with g(x) = 1
        Hpsi = _outer(G, G) + self.gauge.value(X)[:, None, None] * self.gauge.hess(X)
        hd = np.linalg.det(Hpsi)
        kappa = hd * hx ** (n + 1)
        jac = rho ** (n - 1) / np.einsum("ni,ni->n", U, N)
        return BoundaryGeometry(X, N, kappa, hx, rho, hd, jac)

    def surface_jacobian_fd(self, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
        """|d x(theta) / d theta| of the planar boundary chart by central differences."""
        if self.dim != 2:
            raise ValueError("finite-difference chart Jacobian implemented for n = 2")

        def x(t):
            return self.boundary_point(np.stack([np.cos(t), np.sin(t)], axis=1))
        return np.linalg.norm((x(theta + h) - x(theta - h)) / (2 * h), axis=1)

    def validate(self, n_samples: int = 50, seed: int = 0) -> None:
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((n_samples, self.dim))
        t = rng.uniform(0.1, 10, n_samples)
        a = self.gauge.value(X * t[:, None])
        b = t * self.gauge.value(X)
        if np.max(np.abs(a - b) / np.abs(b)) > 1e-10:
            raise ValueError(f"{self.name}: gauge is not positively homogeneous")
        geo = self.boundary_geometry(X)
        if np.any(~(geo.kappa > 0)):
            raise ValueError(f"{self.name}: curvature is not positive at sampled boundary points")

    # functionals -----------------------------------------------------------
    def volume(self, tol: Optional[float] = None) -> IntegralResult:
        n = self.dim
        return quad.integrate_sphere(lambda U: self.radial(U) ** n / n, n,
                                     tol or 1e-10, self.angle_breakpoints)


def volume(K: ConvexBody, tol: Optional[float] = None) -> IntegralResult:
    """|K| = (1/n) int_{S^{n-1}} g(u)^{-n} d sigma."""
    return K.volume(tol)


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def boundary_geometry(K: ConvexBody, U) -> BoundaryGeometry:
    return K.boundary_geometry(U)


def df_body(g: Generator, K: ConvexBody, tol: Optional[float] = None) -> IntegralResult:
    """D_f(K) = int_{dK} f(kappa / <x,N>^{n+1}) <x,N> d mu, over the sphere chart."""
    n = K.dim
    if n not in (2, 3):
        raise ValueError("boundary divergences are implemented for n in {2, 3}")

    def h(U):
        geo = K.boundary_geometry(U)
        with np.errstate(all="ignore"):
            lt = np.log(geo.kappa) - (n + 1) * np.log(geo.support)
            lq = np.log(geo.support) + np.log(geo.surface_jacobian)
        return g.perspective(lt, lq)
    res = quad.integrate_sphere(h, n, tol or quad.DEFAULT_TOL[n] * 1e-2, K.angle_breakpoints)
    if not np.isfinite(res.value):
        return IntegralResult(math.inf, 0.0, res.evaluations, True,
                              "divergent: " + (res.diagnostics or "non-finite boundary integral"))
    return res


def body_to_function(K: ConvexBody) -> LogConcaveFn:
    """phi_K = exp(-g^2/2)."""
    return LogConcaveFn(K.psi, None, f"phi[{K.name}]", None, np.zeros(K.dim), smooth_origin=False)


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

def _norm(P):
    return np.linalg.norm(P, axis=1)


def euclidean_gauge(dim: int, scale: float = 1.0) -> ScalarField:
    def val(P):
        return _norm(P) / scale

    def grad(P):
        return P / (_norm(P) * scale)[:, None]

    def hess(P):
        r = _norm(P)
        return (np.eye(dim)[None] - _outer(P, P) / (r ** 2)[:, None, None]) / (r * scale)[:, None, None]
    return ScalarField(dim, val, grad, hess, None, f"|x|/{scale:g}")


def ball(r: float = 1.0, dim: int = 2) -> ConvexBody:
    return ConvexBody(euclidean_gauge(dim, r), f"ball(r={r:g}, n={dim})",
                      oracle_curvature=lambda U: np.full(len(U), 1.0 / r ** (dim - 1)),
                      params={"family": "ball", "r": r})


def ellipsoid(*axes: float) -> ConvexBody:
    a = np.asarray(axes, float)
    n = len(a)
    Ainv2 = np.diag(1 / a ** 2)

    def val(P):
        return np.sqrt(np.einsum("ni,i,ni->n", P, 1 / a ** 2, P))

    def grad(P):
        return (P / a ** 2) / val(P)[:, None]

    def hess(P):
        gv = val(P)
        G = grad(P)
        return (Ainv2[None] - _outer(G, G)) / gv[:, None, None]

    def oracle(U):
        # Gauss curvature of an ellipsoid at x: 1 / (prod a^2 * |x / a^2|^{n+1})
        X = U / val(U)[:, None]
        return 1.0 / (np.prod(a ** 2) * np.linalg.norm(X / a ** 2, axis=1) ** (n + 1))

    body = ConvexBody(ScalarField(n, val, grad, hess, None, f"ellipsoid{tuple(a)}"),
                      f"ellipsoid{tuple(float(v) for v in a)}", oracle_curvature=oracle,
                      params={"family": "ellipsoid", "axes": a.tolist()})
    if n == 2:
        def parametric(U):
            # parametric curve (a cos t, b sin t)
            X = U / val(U)[:, None]
            t = np.arctan2(X[:, 1] / a[1], X[:, 0] / a[0])
            return a[0] * a[1] / (a[0] ** 2 * np.sin(t) ** 2 + a[1] ** 2 * np.cos(t) ** 2) ** 1.5
        body.oracle_curvature = parametric
    return body


def lp_gauge(p: float, dim: int) -> ScalarField:
    """(sum |x_i|^p)^{1/p} with analytic derivatives (p > 1)."""
    def val(P):
        return np.sum(np.abs(P) ** p, axis=1) ** (1 / p)

    def grad(P):
        g = val(P)
        S = np.sign(P) * np.abs(P) ** (p - 1)
        return S * (g ** (1 - p))[:, None]

    def hess(P):
        g = val(P)
        S = np.sign(P) * np.abs(P) ** (p - 1)
        D = np.einsum("ni,ij->nij", np.abs(P) ** (p - 2), np.eye(dim))
        return ((p - 1) * (g ** (1 - p))[:, None, None] * D
                - (p - 1) * (g ** (1 - 2 * p))[:, None, None] * _outer(S, S))
    return ScalarField(dim, val, grad, hess, None, f"l{p:g}")


def lp_smooth(p: float = 8.0, dim: int = 2, eps: float = 0.05) -> ConvexBody:
    """Gauge (1 - eps) |x|_p + eps |x|_2.

    The Euclidean share keeps the curvature strictly positive where the pure
    l_p sphere (p > 2) is flat to high order.  eps = 0 gives the l_p ball.
    """
    lp = lp_gauge(p, dim)
    eu = euclidean_gauge(dim)
    if eps == 0:
        field = lp
    else:
        field = ScalarField(
            dim,
            lambda P: (1 - eps) * lp.value(P) + eps * eu.value(P),
            lambda P: (1 - eps) * lp.grad(P) + eps * eu.grad(P),
            lambda P: (1 - eps) * lp.hess(P) + eps * eu.hess(P),
            None, f"l{p:g}~{eps:g}")
    bps = tuple(np.arange(4) * math.pi / 2) if dim == 2 and p < 2 else ()
    body = ConvexBody(field, f"lp_smooth(p={p:g}, eps={eps:g}, n={dim})", bps,
                      params={"family": "lp_smooth", "p": p, "eps": eps})
    if dim == 2:
        body.oracle_curvature = _parametric_fd_curvature(body)
    return body


def _parametric_fd_curvature(K: ConvexBody, h: float = 1e-3):
    """Curvature of the planar curve theta -> x(theta) = u / g(u) from its
    first and second derivatives by fourth-order central differences.
    Uses only gauge values, never its derivatives."""
    def x(t):
        return K.boundary_point(np.stack([np.cos(t), np.sin(t)], axis=1))

    def oracle(U):
        t = np.arctan2(U[:, 1], U[:, 0])
        xm2, xm1, x0, xp1, xp2 = (x(t + k * h) for k in (-2, -1, 0, 1, 2))
        d1 = (-xp2 + 8 * xp1 - 8 * xm1 + xm2) / (12 * h)
        d2 = (-xp2 + 16 * xp1 - 30 * x0 + 16 * xm1 - xm2) / (12 * h ** 2)
        cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        return np.abs(cross) / np.linalg.norm(d1, axis=1) ** 3
    return oracle


def perturbed_ball(eps: float = 0.05, k: int = 3) -> ConvexBody:
    """Planar body with radial function 1 + eps cos(k theta)."""
    def rho(t):
        return 1 + eps * np.cos(k * t)

    def drho(t):
        return -eps * k * np.sin(k * t)

    def d2rho(t):
        return -eps * k * k * np.cos(k * t)

    if np.min(rho(np.linspace(0, 2 * np.pi, 2001)) ** 2 + 2 * drho(np.linspace(0, 2 * np.pi, 2001)) ** 2
              - rho(np.linspace(0, 2 * np.pi, 2001)) * d2rho(np.linspace(0, 2 * np.pi, 2001))) <= 0:
        raise ValueError("perturbation too large: boundary curvature is not positive")

    def parts(P):
        r = _norm(P)
        t = np.arctan2(P[:, 1], P[:, 0])
        R, R1, R2 = rho(t), drho(t), d2rho(t)
        h = 1 / R
        h1 = -R1 / R ** 2
        h2 = -R2 / R ** 2 + 2 * R1 ** 2 / R ** 3
        er = P / r[:, None]
        et = np.stack([-er[:, 1], er[:, 0]], axis=1)
        return r, h, h1, h2, er, et

    def val(P):
        r, h, *_ = parts(P)
        return r * h

    def grad(P):
        r, h, h1, h2, er, et = parts(P)
        return h[:, None] * er + h1[:, None] * et

    def hess(P):
        r, h, h1, h2, er, et = parts(P)
        return ((h + h2) / r)[:, None, None] * _outer(et, et)

    def oracle(U):
        t = np.arctan2(U[:, 1], U[:, 0])
        R, R1, R2 = rho(t), drho(t), d2rho(t)
        return (R ** 2 + 2 * R1 ** 2 - R * R2) / (R ** 2 + R1 ** 2) ** 1.5

    return ConvexBody(ScalarField(2, val, grad, hess, None, "perturbed"),
                      f"perturbed_ball(eps={eps:g}, k={k})", oracle_curvature=oracle,
                      params={"family": "perturbed_ball", "eps": eps, "k": k})


# ---------------------------------------------------------------------------
# polar body
# ---------------------------------------------------------------------------

class PolarGauge(ScalarField):
    """Support function of K, i.e. the gauge of K°.

    h_K(y) = max over boundary points x of <x, y>: sampled on the sphere chart,
    then refined (golden section in the angle for n = 2) and polished by Newton
    on the conjugate of g_K^2/2.  Gradient: the maximizing boundary point.
    Hessian: from Hess(h^2/2)(y) = inverse of Hess(g_K^2/2) at h(y) x*(y).
    """

    def __init__(self, K: ConvexBody, samples: Optional[int] = None):
        self.K = K
        n = K.dim
        m = samples or SPHERE_SAMPLES.get(n, 4000)
        self._U = unit_directions(n, m)
        self._X = K.boundary_point(self._U)
        self._key = None
        self._sol = None
        super().__init__(n, self._val, self._grad, self._hess, None, f"polar[{K.gauge.name}]")

    def maximizer(self, Y):
        P, single = as_points(Y, self.dim)
        key = P.tobytes()
        if key != self._key:
            self._sol = self._solve(P)
            self._key = key
        return self._sol[0] if single else self._sol

    def _solve(self, Y):
        n = self.dim
        k = np.argmax(Y @ self._X.T, axis=1)
        if n == 2:
            th0 = np.arctan2(self._U[k, 1], self._U[k, 0])
            dth = 2 * math.pi / len(self._U)
            a, b = th0 - 1.5 * dth, th0 + 1.5 * dth

            def F(t):
                Xb = self.K.boundary_point(np.stack([np.cos(t), np.sin(t)], axis=1))
                return np.einsum("ni,ni->n", Xb, Y)
            gr = (math.sqrt(5) - 1) / 2
            c, d = b - gr * (b - a), a + gr * (b - a)
            fc, fd = F(c), F(d)
            for _ in range(60):
                left = fc > fd
                b = np.where(left, d, b)
                a = np.where(left, a, c)
                nc = np.where(left, b - gr * (b - a), d)
                nd = np.where(left, c, a + gr * (b - a))
                c, d = nc, nd
                fc, fd = F(c), F(d)
            t = 0.5 * (a + b)
            X0 = self.K.boundary_point(np.stack([np.cos(t), np.sin(t)], axis=1))
        else:
            X0 = self._X[k]
        # Legendre Newton on psi_K: grad psi_K(h x*) = y.  In 2-D this polishes the
        # golden-section angle, which is only good to about sqrt(machine eps).
        from .transforms import LegendreField
        h0 = np.einsum("ni,ni->n", X0, Y)
        Xs, good = LegendreField(self.K.psi)._newton(Y, X0 * h0[:, None])
        if n == 2:
            Xs = np.where(good[:, None], Xs, X0 * h0[:, None])
        elif not np.all(good):
            raise RuntimeError("polar gauge refinement failed")
        return Xs / self.K.gauge.value(Xs)[:, None]

    def _val(self, Y):
        return np.einsum("ni,ni->n", self.maximizer(Y), Y)

    def _grad(self, Y):
        return self.maximizer(Y).copy()

    def _hess(self, Y):
        Xs = self.maximizer(Y)
        h = np.einsum("ni,ni->n", Xs, Y)
        Hpsi = np.linalg.inv(self.K.psi.hess(Xs * h[:, None]))
        out = (Hpsi - _outer(Xs, Xs)) / h[:, None, None]
        return 0.5 * (out + np.swapaxes(out, 1, 2))


def polar_body(K: ConvexBody, samples: Optional[int] = None) -> ConvexBody:
    """K° = {y : <x, y> <= 1 for all x in K}; its gauge is the support function of K."""
    pg = PolarGauge(K, samples)
    body = ConvexBody(pg, f"polar[{K.name}]", (), None, {"family": "polar", "of": K.name})
    if K.dim == 2:
        body.oracle_curvature = _parametric_fd_curvature(body)
    return body


# ---------------------------------------------------------------------------
# lift of a 1-concave function on an interval to a planar body
# ---------------------------------------------------------------------------

class LiftGauge(ScalarField):
    """Gauge of {(a, b) : a in supp phi, |b| <= phi(a)} solving g phi(a/g) = |b|."""

    def __init__(self, phi: SConcaveFn):
        self.phi = phi
        self.lo = -phi.support.radial(np.array([[-1.0]]))[0]
        self.hi = phi.support.radial(np.array([[1.0]]))[0]
        super().__init__(2, self._val, self._grad, self._hess, None, f"lift[{phi.name}]")
        self._key = None
        self._g = None

    def _phi(self, t):
        return self.phi(np.asarray(t, float)[:, None])

    def _radius(self, U):
        """Boundary distance along unit vectors U: root of phi(r u1) = r |u2|."""
        u1, u2 = U[:, 0], np.abs(U[:, 1])
        with np.errstate(divide="ignore"):
            rmax = np.where(u1 > 0, self.hi / np.where(u1 > 0, u1, 1),
                            np.where(u1 < 0, self.lo / np.where(u1 < 0, u1, 1), np.inf))
        phi0 = float(self._phi(np.zeros(1))[0])
        rmax = np.minimum(rmax, 2 * phi0 / np.maximum(u2, 1e-300) + 1.0)
        lo = np.zeros(len(U))
        hi = rmax.copy()
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            inside = self._phi(mid * u1) - mid * u2 > 0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        r = 0.5 * (lo + hi)
        # Newton polish where phi is differentiable
        for _ in range(3):
            t = r * u1
            ok = (t > self.lo) & (t < self.hi)
            tt = np.where(ok, t, 0.0)
            F = self._phi(tt) - r * u2
            dF = self.phi.phi.grad(tt[:, None])[:, 0] * u1 - u2
            step = np.where(ok & (np.abs(dF) > 1e-300), F / dF, 0.0)
            rn = r - step
            r = np.where(ok & (rn > lo - 1e-12) & (rn < hi + 1e-12), rn, r)
        return r

    def _gauge(self, P):
        key = P.tobytes()
        if key != self._key:
            nr = np.linalg.norm(P, axis=1)
            self._g = nr / self._radius(P / nr[:, None])
            self._key = key
        return self._g

    def _val(self, P):
        return self._gauge(P)

    def _derivs(self, P):
        g = self._gauge(P)
        t = P[:, 0] / g
        f = self._phi(t)
        f1 = self.phi.phi.grad(t[:, None])[:, 0]
        f2 = self.phi.phi.hess(t[:, None])[:, 0, 0]
        u = f - t * f1
        return g, t, f, f1, f2, u, np.sign(P[:, 1])

    def _grad(self, P):
        g, t, f, f1, f2, u, sb = self._derivs(P)
        return np.stack([-f1 / u, sb / u], axis=1)

    def _hess(self, P):
        g, t, f, f1, f2, u, sb = self._derivs(P)
        c = f2 / (u ** 3 * g)
        H = np.empty((len(P), 2, 2))
        H[:, 0, 0] = -c * f ** 2
        H[:, 0, 1] = H[:, 1, 0] = sb * c * t * f
        H[:, 1, 1] = -c * t ** 2
        return H


def lift_body(phi: SConcaveFn) -> ConvexBody:
    """K_1(phi) = {(x, y) : x in supp phi, |y| <= phi(x)} for 1-concave phi on an interval."""
    if phi.dim != 1 or abs(phi.s - 1.0) > 1e-12:
        raise ValueError("lift_body is implemented for s = 1 and n = 1 only")
    return ConvexBody(LiftGauge(phi), f"K1[{phi.name}]", (0.0, math.pi),
                      params={"family": "lift", "of": phi.name})


def lift_factor(s: float, n: int) -> float:
    """s^{n/2} vol_{1/s - 1}(S^{1/s - 1}); the 0-sphere has two points."""
    k = 1.0 / s - 1.0
    if abs(k - round(k)) > 1e-12:
        raise ValueError("1/s must be a positive integer")
    sphere = 2 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)
    return s ** (n / 2) * sphere
