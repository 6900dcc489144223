"""Scalar fields with derivative access, support sets, and the log-concave /
s-concave function families used throughout the package.

Points are passed either as a single ``(n,)`` vector or a batch ``(N, n)``;
outputs follow the same convention.
"""
from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

from . import quadrature as quad

EPS = np.finfo(float).eps
H_GRAD = EPS ** (1.0 / 3.0)
H_HESS = EPS ** (1.0 / 4.0)
LOG_CUT = math.log(1e12)
PD_TOL = 1e-10


class StencilError(ValueError):
    """Finite-difference stencil leaves the field's domain."""


class NotStrictlyConvex(ValueError):
    pass


def as_points(X, dim: int) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, float)
    if X.ndim == 1 and X.shape[0] == dim:
        return X[None, :], True
    if X.ndim == 1 and dim == 1:
        return X[:, None], False
    if X.ndim == 2 and X.shape[1] == dim:
        return X, False
    raise ValueError(f"expected points of dimension {dim}, got shape {X.shape}")


# ---------------------------------------------------------------------------
# Scalar fields
# ---------------------------------------------------------------------------

class ScalarField:
    """A C^2 function on (a subset of) R^n.

    value / gradient / hessian callables act on ``(N, n)`` batches.  Missing
    derivatives are filled by central finite differences.
    """

    def __init__(self, dim: int, value: Callable, gradient: Optional[Callable] = None,
                 hessian: Optional[Callable] = None, domain=None, name: str = ""):
        self.dim = int(dim)
        self._value = value
        self._gradient = gradient
        self._hessian = hessian
        self.domain = domain
        self.name = name

    @property
    def derivative_mode(self) -> str:
        if self._gradient is not None and self._hessian is not None:
            return "analytic"
        if self._gradient is None and self._hessian is None:
            return "finite-difference"
        return "mixed"

    def value(self, X):
        P, single = as_points(X, self.dim)
        with np.errstate(all="ignore"):
            v = np.asarray(self._value(P), float)
        return v[0] if single else v

    __call__ = value

    def grad(self, X):
        P, single = as_points(X, self.dim)
        if self._gradient is not None:
            with np.errstate(all="ignore"):
                G = np.asarray(self._gradient(P), float).reshape(P.shape)
        else:
            G = self.fd_gradient(P)
        return G[0] if single else G

    def hess(self, X):
        P, single = as_points(X, self.dim)
        if self._hessian is not None:
            with np.errstate(all="ignore"):
                H = np.asarray(self._hessian(P), float).reshape(P.shape[0], self.dim, self.dim)
        else:
            H = self.fd_hessian(P)
        return H[0] if single else H

    # finite differences -------------------------------------------------
    def _check_stencil(self, P, h):
        if self.domain is None:
            return
        n = self.dim
        for i in range(n):
            for sgn in (-2.0, 2.0):
                Q = P.copy()
                Q[:, i] += sgn * h
                if not np.all(self.domain.contains(Q)):
                    raise StencilError("point too close to the domain boundary for the stencil")

    def fd_gradient(self, X):
        P, single = as_points(X, self.dim)
        h = H_GRAD * np.maximum(1.0, np.linalg.norm(P, axis=1))
        self._check_stencil(P, h)
        n = self.dim
        G = np.empty_like(P)
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            fp = self.value(P + h[:, None] * e)
            fm = self.value(P - h[:, None] * e)
            G[:, i] = (fp - fm) / (2 * h)
        return G[0] if single else G

    def fd_hessian(self, X):
        P, single = as_points(X, self.dim)
        n = self.dim
        N = P.shape[0]
        H = np.empty((N, n, n))
        if self._gradient is not None:
            h = H_GRAD * np.maximum(1.0, np.linalg.norm(P, axis=1))
            self._check_stencil(P, h)
            for j in range(n):
                e = np.zeros(n)
                e[j] = 1.0
                H[:, :, j] = (self.grad(P + h[:, None] * e) - self.grad(P - h[:, None] * e)) / (2 * h[:, None])
        else:
            h = H_HESS * np.maximum(1.0, np.linalg.norm(P, axis=1))
            self._check_stencil(P, h)
            f0 = self.value(P)
            for i in range(n):
                ei = np.zeros(n)
                ei[i] = 1.0
                fp = self.value(P + h[:, None] * ei)
                fm = self.value(P - h[:, None] * ei)
                H[:, i, i] = (fp - 2 * f0 + fm) / h ** 2
                for j in range(i + 1, n):
                    ej = np.zeros(n)
                    ej[j] = 1.0
                    fpp = self.value(P + h[:, None] * (ei + ej))
                    fpm = self.value(P + h[:, None] * (ei - ej))
                    fmp = self.value(P + h[:, None] * (ej - ei))
                    fmm = self.value(P - h[:, None] * (ei + ej))
                    H[:, i, j] = H[:, j, i] = (fpp - fpm - fmp + fmm) / (4 * h ** 2)
        H = 0.5 * (H + np.swapaxes(H, 1, 2))
        return H[0] if single else H

    def finite_difference(self) -> "ScalarField":
        """Same values, derivatives by finite differences only."""
        return ScalarField(self.dim, self._value, None, None, self.domain, self.name + " [fd]")

    def compose_linear(self, T: np.ndarray) -> "ScalarField":
        """x -> self(T x)."""
        T = np.asarray(T, float)
        return ScalarField(
            self.dim,
            lambda P: self.value(P @ T.T),
            lambda P: self.grad(P @ T.T) @ T,
            lambda P: np.einsum("ki,nkl,lj->nij", T, self.hess(P @ T.T), T),
            None if self.domain is None else LinearPreimage(self.domain, T),
            f"{self.name}∘T")

    def translate(self, x0: Sequence[float]) -> "ScalarField":
        """x -> self(x + x0)."""
        x0 = np.asarray(x0, float)
        return ScalarField(
            self.dim, lambda P: self.value(P + x0), lambda P: self.grad(P + x0),
            lambda P: self.hess(P + x0),
            None if self.domain is None else Translated(self.domain, -x0),
            f"{self.name}(·+x0)")


def differentiate(field: ScalarField, x, order: str = "gradient"):
    """Central finite-difference gradient or Hessian at ``x``."""
    if order == "gradient":
        return field.fd_gradient(x)
    if order == "hessian":
        return field.fd_hessian(x)
    raise ValueError("order must be 'gradient' or 'hessian'")


def radial_field(dim: int, p: Callable, dp: Callable, d2p: Callable, name: str) -> ScalarField:
    """psi(x) = p(|x|^2) with p, p', p'' given as functions of u = |x|^2."""
    def val(P):
        return p(np.einsum("ij,ij->i", P, P))

    def grad(P):
        u = np.einsum("ij,ij->i", P, P)
        return 2 * dp(u)[:, None] * P

    def hess(P):
        u = np.einsum("ij,ij->i", P, P)
        n = P.shape[1]
        return (2 * dp(u)[:, None, None] * np.eye(n)
                + 4 * d2p(u)[:, None, None] * np.einsum("ni,nj->nij", P, P))

    return ScalarField(dim, val, grad, hess, None, name)


# ---------------------------------------------------------------------------
# Supports (open star-shaped sets, convex in practice)
# ---------------------------------------------------------------------------

class Support:
    dim: int
    center: np.ndarray
    bounded = True

    def contains(self, X) -> np.ndarray:
        raise NotImplementedError

    def radial(self, U: np.ndarray) -> np.ndarray:
        """Distance from ``center`` to the boundary along unit vectors ``U``."""
        raise NotImplementedError

    def polar(self) -> "Support":
        raise NotImplementedError(f"polar set of {type(self).__name__} not available")

    def scaled(self, c: float) -> "Support":
        return Scaled(self, c)

    def domain(self) -> quad.StarDomain:
        return quad.StarDomain(tuple(self.center), self.radial, self.dim)

    def sample(self, rng: np.random.Generator, m: int, margin: float = 0.95) -> np.ndarray:
        U = rng.standard_normal((m, self.dim))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        t = rng.uniform(0, 1, m) ** (1.0 / self.dim) * margin
        return self.center + (t * self.radial(U))[:, None] * U


class WholeSpace(Support):
    bounded = False

    def __init__(self, dim: int):
        self.dim = dim
        self.center = np.zeros(dim)

    def contains(self, X):
        P, _ = as_points(X, self.dim)
        return np.ones(P.shape[0], bool)

    def radial(self, U):
        return np.full(len(U), np.inf)


class Ellipsoid(Support):
    """{x : |M x| < 1}; a ball of radius r is M = I / r."""

    def __init__(self, M):
        self.M = np.atleast_2d(np.asarray(M, float))
        self.dim = self.M.shape[0]
        self.center = np.zeros(self.dim)

    def contains(self, X):
        P, _ = as_points(X, self.dim)
        return np.linalg.norm(P @ self.M.T, axis=1) < 1.0

    def radial(self, U):
        return 1.0 / np.linalg.norm(np.asarray(U) @ self.M.T, axis=1)

    def polar(self):
        return Ellipsoid(np.linalg.inv(self.M).T)

    def scaled(self, c):
        return Ellipsoid(self.M / c)


def ball_support(radius: float = 1.0, dim: int = 1) -> Ellipsoid:
    return Ellipsoid(np.eye(dim) / radius)


class Interval(Support):
    """Open interval (lo, hi) with lo < 0 < hi."""

    def __init__(self, lo: float, hi: float):
        if not lo < 0 < hi:
            raise ValueError("interval must contain 0 in its interior")
        self.lo, self.hi = float(lo), float(hi)
        self.dim = 1
        self.center = np.zeros(1)

    def contains(self, X):
        P, _ = as_points(X, 1)
        return (P[:, 0] > self.lo) & (P[:, 0] < self.hi)

    def radial(self, U):
        u = np.asarray(U)[:, 0]
        return np.where(u > 0, self.hi, -self.lo) / np.abs(u)

    def polar(self):
        return Interval(1.0 / self.lo, 1.0 / self.hi)

    def scaled(self, c):
        return Interval(self.lo * c, self.hi * c)


class Sublevel(Support):
    """{x : psi(x) < level}, star-shaped about ``center`` (psi convex)."""

    def __init__(self, psi: ScalarField, level: float, center=None, r_max: float = 1e6):
        self.psi = psi
        self.level = float(level)
        self.dim = psi.dim
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, float)
        self.r_max = r_max
        if not self.psi.value(self.center[None, :])[0] < self.level:
            raise ValueError("sublevel center is not inside the set")

    def contains(self, X):
        P, _ = as_points(X, self.dim)
        return self.psi.value(P) < self.level

    def radial(self, U):
        return ray_crossing(self.psi, self.center, np.asarray(U, float), self.level, self.r_max)


class Scaled(Support):
    def __init__(self, base: Support, c: float):
        self.base, self.c = base, float(c)
        self.dim = base.dim
        self.center = base.center * self.c

    def contains(self, X):
        P, _ = as_points(X, self.dim)
        return self.base.contains(P / self.c)

    def radial(self, U):
        return abs(self.c) * self.base.radial(math.copysign(1.0, self.c) * np.asarray(U))

    def polar(self):
        return Scaled(self.base.polar(), 1.0 / self.c)


class LinearPreimage(Support):
    """{x : T x in base}."""

    def __init__(self, base: Support, T):
        self.base = base
        self.T = np.asarray(T, float)
        self.dim = base.dim
        self.center = np.linalg.solve(self.T, base.center)
        self.bounded = base.bounded

    def contains(self, X):
        P, _ = as_points(X, self.dim)
        return self.base.contains(P @ self.T.T)

    def radial(self, U):
        V = np.asarray(U) @ self.T.T
        nv = np.linalg.norm(V, axis=1)
        return self.base.radial(V / nv[:, None]) / nv


class Translated(Support):
    """{x : x - shift in base}."""

    def __init__(self, base: Support, shift):
        self.base = base
        self.shift = np.asarray(shift, float)
        self.dim = base.dim
        self.center = base.center + self.shift
        self.bounded = base.bounded

    def contains(self, X):
        P, _ = as_points(X, self.dim)
        return self.base.contains(P - self.shift)

    def radial(self, U):
        return self.base.radial(U)


class BoxSupport(Support):
    """Axis-aligned open box; integrated directly as a box."""

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, float)
        self.upper = np.asarray(upper, float)
        self.dim = len(self.lower)
        self.center = 0.5 * (self.lower + self.upper)

    def contains(self, X):
        P, _ = as_points(X, self.dim)
        return np.all((P > self.lower) & (P < self.upper), axis=1)

    def radial(self, U):
        U = np.asarray(U, float)
        with np.errstate(divide="ignore"):
            t = np.where(U > 0, (self.upper - self.center) / U,
                         np.where(U < 0, (self.lower - self.center) / U, np.inf))
        return t.min(axis=1)

    def domain(self):
        return quad.Box(tuple(self.lower), tuple(self.upper))


def ray_crossing(psi: ScalarField, center: np.ndarray, U: np.ndarray, level: float,
                 r_max: float = 1e6, iters: int = 60) -> np.ndarray:
    """Radius r(u) where psi(center + r u) first reaches ``level`` (convex psi)."""
    m = U.shape[0]
    lo = np.zeros(m)
    hi = np.full(m, 1.0)
    for _ in range(80):
        v = psi.value(center + hi[:, None] * U)
        out = ~(v < level)  # nan counts as outside
        if np.all(out) or np.all(hi >= r_max):
            break
        lo = np.where(out, lo, hi)
        hi = np.where(out, hi, np.minimum(2 * hi, r_max))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        v = psi.value(center + mid[:, None] * U)
        inside = v < level
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def unit_directions(dim: int, m: int = 64) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        th = np.linspace(0, 2 * np.pi, m, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    # Fibonacci sphere
    k = np.arange(m) + 0.5
    z = 1 - 2 * k / m
    r = np.sqrt(1 - z ** 2)
    ph = np.pi * (1 + 5 ** 0.5) * k
    return np.stack([r * np.cos(ph), r * np.sin(ph), z], axis=1)


# ---------------------------------------------------------------------------
# Log-concave functions
# ---------------------------------------------------------------------------

class LogConcaveFn:
    """phi = exp(-psi) with psi convex.

    ``closed_form`` optionally records ``{"A": ..., "C": ...}`` for
    phi = C exp(-<Ax, x>); transforms use it when a closed-form route is asked for.
    """

    def __init__(self, potential: ScalarField, support: Optional[Support] = None,
                 name: str = "", closed_form: Optional[dict] = None,
                 minimizer: Optional[Sequence[float]] = None, smooth_origin: bool = True):
        self.potential = potential
        self.dim = potential.dim
        self.support = support if support is not None else WholeSpace(self.dim)
        self.name = name or potential.name
        self.closed_form = closed_form
        self._minimizer = None if minimizer is None else np.asarray(minimizer, float)
        # False when Hess psi is discontinuous at the minimizer (homogeneous potentials)
        self.smooth_origin = smooth_origin
        self._domain = None

    def __call__(self, X):
        return np.exp(-self.potential.value(X))

    def log(self, X):
        return -self.potential.value(X)

    def __repr__(self):
        return f"LogConcaveFn({self.name}, n={self.dim})"

    @property
    def minimizer(self) -> np.ndarray:
        if self._minimizer is None:
            self._minimizer = _minimize(self.potential, self.support.center)
        return self._minimizer

    def validate(self, n_samples: int = 100, seed: int = 0) -> None:
        """Positive definite Hessian on samples; raises NotStrictlyConvex."""
        rng = np.random.default_rng(seed)
        X = self.sample(rng, n_samples)
        H = self.potential.hess(X)
        if not np.all(np.isfinite(H)):
            raise NotStrictlyConvex(f"{self.name}: non-finite Hessian at sampled points")
        lam = np.linalg.eigvalsh(H).min(axis=1)
        if np.any(lam < PD_TOL):
            raise NotStrictlyConvex(
                f"{self.name}: Hessian not positive definite (min eigenvalue {lam.min():.3g})")

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """Points from the bulk of phi (inside the level set psi < psi_min + 3)."""
        c = self.minimizer
        U = rng.standard_normal((m, self.dim))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        level = self.potential.value(c[None, :])[0] + 3.0
        R = ray_crossing(self.potential, c, U, level)
        if self.support.bounded:
            R = np.minimum(R, 0.95 * self.support.radial(U))
        t = rng.uniform(0.05, 1.0, m) ** (1.0 / self.dim)
        return c + (t * R)[:, None] * U

    def truncation_radius(self, U: np.ndarray) -> np.ndarray:
        """Radius where phi drops to 1e-12 of its maximum along ``U``."""
        c = self.minimizer
        level = self.potential.value(c[None, :])[0] + LOG_CUT
        R = ray_crossing(self.potential, c, U, level)
        if self.support.bounded:
            R = np.minimum(R, self.support.radial(U))
        return R

    def integration_domain(self):
        """Truncated support as a quadrature domain centred at the minimizer."""
        if self._domain is not None:
            return self._domain
        c = self.minimizer
        n = self.dim
        if isinstance(self.support, BoxSupport):
            self._domain = self.support.domain()
            return self._domain
        if n == 1:
            U = np.array([[1.0], [-1.0]])
            r = self.truncation_radius(U) * 1.02
            if self.support.bounded:
                # support radii are measured from its own centre, not from the minimizer
                r = np.minimum(r, self.support.radial(U) + (self.support.center - c) @ U.T)
            self._domain = quad.Box((c[0] - r[1],), (c[0] + r[0],))
        elif n == 2:
            m = 256
            th = np.linspace(0, 2 * np.pi, m, endpoint=False)
            U = np.stack([np.cos(th), np.sin(th)], axis=1)
            r = self.truncation_radius(U)
            # smooth, slightly inflated interpolant of r(theta)
            rr = np.maximum.reduce([np.roll(r, k) for k in (-2, -1, 0, 1, 2)]) * 1.05
            if self.support.bounded:
                rr = np.minimum(rr, self.support.radial(U))
            th_ext = np.concatenate([th, [2 * np.pi]])
            rr_ext = np.concatenate([rr, rr[:1]])

            def radial(V):
                a = np.mod(np.arctan2(V[:, 1], V[:, 0]), 2 * np.pi)
                return np.interp(a, th_ext, rr_ext)
            self._domain = quad.StarDomain(tuple(c), radial, 2)
        else:
            U = unit_directions(n, 400)
            R = float(self.truncation_radius(U).max()) * 1.1
            self._domain = quad.ball(R, c, n)
        return self._domain

    def integral(self, tol=None) -> quad.IntegralResult:
        return quad.integrate(lambda X: self(X), self.integration_domain(), tol)

    # constructions -------------------------------------------------------
    def compose(self, T) -> "LogConcaveFn":
        """phi(T x) for an invertible matrix T."""
        T = np.asarray(T, float)
        cf = None
        if self.closed_form is not None:
            cf = {"A": T.T @ self.closed_form["A"] @ T, "C": self.closed_form["C"]}
        sup = self.support if isinstance(self.support, WholeSpace) else LinearPreimage(self.support, T)
        return LogConcaveFn(self.potential.compose_linear(T), sup, f"{self.name}∘T", cf,
                            np.linalg.solve(T, self.minimizer), self.smooth_origin)

    def translate(self, x0) -> "LogConcaveFn":
        """phi(x + x0)."""
        x0 = np.asarray(x0, float)
        sup = self.support if isinstance(self.support, WholeSpace) else Translated(self.support, -x0)
        return LogConcaveFn(self.potential.translate(x0), sup, f"{self.name}(·+x0)", None,
                            self.minimizer - x0, self.smooth_origin)

    def scaled_value(self, c: float) -> "LogConcaveFn":
        """c * phi."""
        lc = math.log(c)
        p = self.potential
        cf = None if self.closed_form is None else {"A": self.closed_form["A"],
                                                    "C": self.closed_form["C"] * c}
        field = ScalarField(self.dim, lambda P: p.value(P) - lc, p.grad, p.hess, p.domain,
                            f"{p.name}-ln{c:g}")
        return LogConcaveFn(field, self.support, f"{c:g}·{self.name}", cf, self._minimizer,
                            self.smooth_origin)


def _minimize(psi: ScalarField, x0: np.ndarray, iters: int = 100) -> np.ndarray:
    """Damped Newton for the minimizer of a strictly convex potential."""
    x = np.asarray(x0, float).copy()
    fx = psi.value(x)
    for _ in range(iters):
        g = psi.grad(x)
        if np.linalg.norm(g) < 1e-13 * max(1.0, np.linalg.norm(x)):
            break
        H = psi.hess(x)
        try:
            d = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            d = -g
        t = 1.0
        for _ in range(60):
            xn = x + t * d
            fn = psi.value(xn)
            if np.isfinite(fn) and fn <= fx:
                break
            t *= 0.5
        else:
            break
        if np.linalg.norm(xn - x) < 1e-15 * max(1.0, np.linalg.norm(x)):
            x = xn
            break
        x, fx = xn, fn
    return x


# families -------------------------------------------------------------------

def gaussian(A=None, C: float = 1.0, dim: Optional[int] = None) -> LogConcaveFn:
    """phi(x) = C exp(-<A x, x>)."""
    if A is None:
        A = 0.5 * np.eye(dim or 1)
    A = np.atleast_2d(np.asarray(A, float))
    if not np.allclose(A, A.T):
        raise ValueError("A must be symmetric")
    n = A.shape[0]
    lnC = math.log(C)
    field = ScalarField(
        n,
        lambda P: np.einsum("ni,ij,nj->n", P, A, P) - lnC,
        lambda P: 2 * P @ A,
        lambda P: np.broadcast_to(2 * A, (P.shape[0], n, n)).copy(),
        None, "gaussian")
    return LogConcaveFn(field, None, f"gaussian(A={A.tolist()}, C={C:g})", {"A": A.copy(), "C": float(C)},
                        np.zeros(n))


def standard_gaussian(dim: int = 1) -> LogConcaveFn:
    return gaussian(0.5 * np.eye(dim), 1.0)


def _cosh_coeffs(r):
    """a = sinh r / r and b = (cosh r - a) / r^2 with series near 0."""
    small = r < 1e-3
    rs = np.where(small, 1.0, r)
    a = np.where(small, 1 + r ** 2 / 6 + r ** 4 / 120, np.sinh(rs) / rs)
    b = np.where(small, 1.0 / 3 + r ** 2 / 30 + r ** 4 / 840,
                 (np.cosh(rs) - np.sinh(rs) / rs) / rs ** 2)
    return a, b


def cosh_potential(dim: int = 1) -> LogConcaveFn:
    """psi(x) = cosh|x| - 1."""
    def val(P):
        return np.cosh(np.linalg.norm(P, axis=1)) - 1.0

    def grad(P):
        a, _ = _cosh_coeffs(np.linalg.norm(P, axis=1))
        return a[:, None] * P

    def hess(P):
        a, b = _cosh_coeffs(np.linalg.norm(P, axis=1))
        return a[:, None, None] * np.eye(P.shape[1]) + b[:, None, None] * np.einsum("ni,nj->nij", P, P)

    field = ScalarField(dim, val, grad, hess, None, "cosh|x|-1")
    return LogConcaveFn(field, None, "cosh_potential", None, np.zeros(dim))


def radial_polynomial(coeffs: Sequence[float], dim: int = 1, name: str = "") -> LogConcaveFn:
    """psi(x) = sum_k c_k |x|^{2k}."""
    c = np.polynomial.Polynomial(np.asarray(coeffs, float))
    dc, d2c = c.deriv(1), c.deriv(2)
    field = radial_field(dim, c, dc, d2c, name or f"radial_poly{list(coeffs)}")
    return LogConcaveFn(field, None, field.name, None, np.zeros(dim))


def quartic_potential(a: float = 1.0, dim: int = 1) -> LogConcaveFn:
    """psi(x) = a |x|^4 / 4 + |x|^2 / 2."""
    return radial_polynomial([0.0, 0.5, a / 4.0], dim, f"quartic(a={a:g})")


# ---------------------------------------------------------------------------
# s-concave functions
# ---------------------------------------------------------------------------

class SConcaveFn:
    """Borell s-concave phi = (1 - s psi)^{1/s} on an open bounded support.

    The convex potential psi = (1 - phi^s)/s is stored; phi is derived.
    """

    def __init__(self, s: float, potential: ScalarField, support: Support, name: str = "",
                 phi: Optional[ScalarField] = None):
        if s == 0:
            raise ValueError("s must be nonzero")
        self.s = float(s)
        self.potential = potential
        self.support = support
        self.dim = potential.dim
        self.name = name or potential.name
        self._phi = phi
        self.boundary_decay = True

    def __repr__(self):
        return f"SConcaveFn({self.name}, s={self.s:g}, n={self.dim})"

    @property
    def phi(self) -> ScalarField:
        if self._phi is None:
            s, p = self.s, self.potential

            def val(P):
                w = 1 - s * p.value(P)
                return np.where(w > 0, np.abs(w) ** (1 / s), 0.0)

            def grad(P):
                w = 1 - s * p.value(P)
                return -(w ** (1 / s - 1))[:, None] * p.grad(P)

            def hess(P):
                w = 1 - s * p.value(P)
                g = p.grad(P)
                return (-(w ** (1 / s - 1))[:, None, None] * p.hess(P)
                        + ((1 - s) * w ** (1 / s - 2))[:, None, None] * np.einsum("ni,nj->nij", g, g))
            self._phi = ScalarField(self.dim, val, grad, hess, self.support, f"phi[{self.name}]")
        return self._phi

    def __call__(self, X):
        P, single = as_points(X, self.dim)
        inside = self.support.contains(P)
        v = np.where(inside, self.phi.value(P), 0.0)
        return v[0] if single else v

    @classmethod
    def from_phi(cls, s: float, phi: ScalarField, support: Support, name: str = "") -> "SConcaveFn":
        return cls(s, s_potential_field(phi, s, support), support, name or phi.name, phi)

    def sample(self, rng: np.random.Generator, m: int, margin: float = 0.95) -> np.ndarray:
        return self.support.sample(rng, m, margin)

    def validate(self, n_samples: int = 100, seed: int = 0) -> None:
        rng = np.random.default_rng(seed)
        X = self.sample(rng, n_samples)
        v = self.phi.value(X)
        if np.any(~(v > 0)):
            raise ValueError(f"{self.name}: phi must be positive on its support")
        w = 1 - self.s * self.potential.value(X)
        D = w + self.s * np.einsum("ni,ni->n", X, self.potential.grad(X))
        if np.any(D <= 0):
            raise ValueError(f"{self.name}: density Q is not positive on the support")
        Y = self.sample(rng, n_samples)
        lam = rng.uniform(0, 1, n_samples)
        Z = (1 - lam)[:, None] * X + lam[:, None] * Y
        s = self.s
        rhs = ((1 - lam) * self.phi.value(X) ** s + lam * self.phi.value(Y) ** s) ** (1 / s)
        if np.any(self.phi.value(Z) < rhs - 1e-8):
            raise ValueError(f"{self.name}: not {s:g}-concave on sampled triples")

    def domain(self):
        return self.support.domain()

    def integral(self, shrink: float = 1.0, tol=None) -> quad.IntegralResult:
        return quad.integrate(lambda X: self(X), self.support.domain(), tol, shrink=shrink)


def s_potential_field(phi: ScalarField, s: float, support: Optional[Support] = None) -> ScalarField:
    """psi = (1 - phi^s)/s with chain-rule derivatives."""
    def val(P):
        v = phi.value(P)
        if np.any(v <= 0):
            raise ValueError("phi must be positive at interior points")
        return (1 - v ** s) / s

    def grad(P):
        v = phi.value(P)
        return -(v ** (s - 1))[:, None] * phi.grad(P)

    def hess(P):
        v = phi.value(P)
        g = phi.grad(P)
        return -(v ** (s - 1))[:, None, None] * (
            phi.hess(P) + ((s - 1) / v)[:, None, None] * np.einsum("ni,nj->nij", g, g))

    has = phi.derivative_mode == "analytic"
    return ScalarField(phi.dim, val, grad if has else None, hess if has else None,
                       support, f"s_potential({phi.name})")


def s_potential(phi: SConcaveFn) -> ScalarField:
    """The convex potential psi = (1 - phi^s)/s of an s-concave function."""
    return s_potential_field(phi.phi, phi.s, phi.support)


def s_approximation(phi: LogConcaveFn, s: float) -> SConcaveFn:
    """(1 + s ln phi)_+^{1/s}; its s-potential is psi restricted to {psi < 1/s}."""
    if s <= 0:
        raise ValueError("s must be positive")
    sup = Sublevel(phi.potential, 1.0 / s, phi.minimizer)
    pot = ScalarField(phi.dim, phi.potential._value, phi.potential._gradient,
                      phi.potential._hessian, sup, phi.potential.name)
    return SConcaveFn(s, pot, sup, f"{phi.name}_s={s:g}")


def s_ball(s: float = 1.0, dim: int = 1) -> SConcaveFn:
    """phi^s = 1 - |x|^2 on the unit ball, i.e. potential |x|^2 / s."""
    sup = ball_support(1.0, dim) if dim > 1 else Interval(-1.0, 1.0)
    field = ScalarField(
        dim,
        lambda P: np.einsum("ij,ij->i", P, P) / s,
        lambda P: 2 * P / s,
        lambda P: np.broadcast_to(2 * np.eye(dim) / s, (P.shape[0], dim, dim)).copy(),
        sup, f"|x|^2/{s:g}")
    return SConcaveFn(s, field, sup, f"s_ball(s={s:g})")


def s_concave_from_phi(phi_value: Callable, phi_grad: Callable, phi_hess: Callable,
                       s: float, support: Support, name: str) -> SConcaveFn:
    field = ScalarField(support.dim, phi_value, phi_grad, phi_hess, support, name)
    return SConcaveFn.from_phi(s, field, support, name)


def half_circle() -> SConcaveFn:
    """phi(x) = sqrt(1 - x^2) on (-1, 1), a 1-concave function."""
    return s_concave_from_phi(
        lambda P: np.sqrt(1 - P[:, 0] ** 2),
        lambda P: (-P[:, 0] / np.sqrt(1 - P[:, 0] ** 2))[:, None],
        lambda P: (-(1 - P[:, 0] ** 2) ** -1.5)[:, None, None],
        1.0, Interval(-1.0, 1.0), "sqrt(1-x^2)")
