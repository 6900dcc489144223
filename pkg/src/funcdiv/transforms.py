"""Legendre transform, polar functions, the s-deformed dual and the
change-of-variables map x -> grad psi / (1 - s psi + s <x, grad psi>)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .funcmodel import (LogConcaveFn, ScalarField, SConcaveFn, Support, WholeSpace,
                        as_points, gaussian)

NEWTON_ITERS = 50
GRID_LEGENDRE = {1: 401, 2: 401}
GRID_SDUAL = {1: 801, 2: 201}


class LegendreError(RuntimeError):
    pass


def _chunks(n: int, size: int):
    for i in range(0, n, size):
        yield slice(i, min(n, i + size))


# ---------------------------------------------------------------------------
# Legendre transform
# ---------------------------------------------------------------------------

class LegendreField(ScalarField):
    """y -> sup_x <x, y> - psi(x) evaluated pointwise.

    The maximizer x*(y) is cached for the most recent batch so that value,
    gradient (= x*) and Hessian (= inverse Hessian of psi at x*) share a solve.
    """

    def __init__(self, psi: ScalarField, support: Optional[Support] = None,
                 x0=None, grid: Optional[int] = None, name: str = ""):
        self.psi = psi
        self.psi_support = support
        self.x0 = np.zeros(psi.dim) if x0 is None else np.asarray(x0, float)
        self.grid = grid
        self._key = None
        self._sol = None
        self.stats = {"newton": 0, "golden": 0, "grid": 0}
        super().__init__(psi.dim, self._val, self._grad, self._hess, None,
                         name or f"L[{psi.name}]")

    def _psi_value(self, X):
        v = self.psi.value(X)
        if self.psi_support is not None and self.psi_support.bounded:
            v = np.where(self.psi_support.contains(X), v, np.inf)
        return np.where(np.isnan(v), np.inf, v)

    def maximizer(self, Y) -> np.ndarray:
        P, single = as_points(Y, self.dim)
        key = P.tobytes()
        if key != self._key:
            self._sol = self._solve(P)
            self._key = key
        return self._sol[0] if single else self._sol

    def _objective(self, X, Y):
        return np.einsum("ni,ni->n", X, Y) - self._psi_value(X)

    def _newton(self, Y, X):
        n = self.dim
        F = self._objective(X, Y)
        done = np.zeros(len(Y), bool)
        for _ in range(NEWTON_ITERS):
            act = ~done
            if not np.any(act):
                break
            Xa, Ya = X[act], Y[act]
            G = Ya - self.psi.grad(Xa)
            H = self.psi.hess(Xa)
            ok = np.all(np.isfinite(G), axis=1) & np.all(np.isfinite(H), axis=(1, 2))
            D = np.zeros_like(Xa)
            if np.any(ok):
                try:
                    D[ok] = np.linalg.solve(H[ok], G[ok][..., None])[..., 0]
                except np.linalg.LinAlgError:
                    D[ok] = G[ok]
            conv = np.linalg.norm(G, axis=1) <= 1e-13 * np.maximum(1.0, np.linalg.norm(Ya, axis=1))
            t = np.ones(len(Xa))
            Fa = F[act]
            Xn = Xa + D
            Fn = self._objective(Xn, Ya)
            for _ in range(60):
                bad = ~(Fn >= Fa - 1e-15 * np.abs(Fa)) & ~conv
                if not np.any(bad):
                    break
                t[bad] *= 0.5
                Xn[bad] = Xa[bad] + t[bad, None] * D[bad]
                Fn[bad] = self._objective(Xn[bad], Ya[bad])
            step = t * np.linalg.norm(D, axis=1)
            tiny = step <= 1e-15 * np.maximum(1.0, np.linalg.norm(Xa, axis=1))
            upd = ~conv
            idx = np.flatnonzero(act)
            X[idx[upd]] = Xn[upd]
            F[idx[upd]] = Fn[upd]
            done[idx[conv | (tiny & ok)]] = True
        G = Y - self.psi.grad(X)
        good = np.linalg.norm(G, axis=1) <= 1e-8 * np.maximum(1.0, np.linalg.norm(Y, axis=1))
        return X, good & np.all(np.isfinite(X), axis=1)

    def _golden_1d(self, fun, a, b, iters=200):
        gr = (math.sqrt(5) - 1) / 2
        c, d = b - gr * (b - a), a + gr * (b - a)
        fc, fd = fun(c), fun(d)
        for _ in range(iters):
            if fc > fd:
                b, d, fd = d, c, fc
                c = b - gr * (b - a)
                fc = fun(c)
            else:
                a, c, fc = c, d, fd
                d = a + gr * (b - a)
                fd = fun(d)
            if abs(b - a) < 1e-14 * max(1.0, abs(a)):
                break
        return 0.5 * (a + b)

    def _golden(self, y, x):
        """Cyclic coordinate golden-section ascent from x."""
        x = x.copy()
        for _ in range(20 if self.dim > 1 else 1):
            x_old = x.copy()
            for i in range(self.dim):
                def fun(t, i=i):
                    z = x.copy()
                    z[i] = t
                    return float(self._objective(z[None, :], y[None, :])[0])
                h = 1.0
                a, b = x[i] - h, x[i] + h
                while fun(a) > fun(x[i]) and h < 1e8:
                    h *= 2
                    a = x[i] - h
                while fun(b) > fun(x[i]) and h < 1e8:
                    h *= 2
                    b = x[i] + h
                x[i] = self._golden_1d(fun, a, b)
            if np.linalg.norm(x - x_old) < 1e-13 * max(1.0, np.linalg.norm(x)):
                break
        return x

    def _grid(self, y, x_hint):
        n = self.dim
        m = self.grid or GRID_LEGENDRE.get(n, 101)
        R = max(4.0 * float(np.linalg.norm(x_hint)), 10.0)
        axes = np.linspace(-R, R, m)
        G = np.stack([g.ravel() for g in np.meshgrid(*([axes] * n), indexing="ij")], axis=1)
        F = self._objective(G, np.broadcast_to(y, G.shape))
        k = int(np.nanargmax(F))
        if np.any(np.abs(G[k]) >= R * (1 - 1e-12)):
            raise LegendreError(f"grid sup at the grid boundary for y={y}; y outside the range of grad psi")
        return G[k]

    def _solve(self, Y):
        X = np.broadcast_to(self.x0, Y.shape).copy()
        X, good = self._newton(Y, X)
        self.stats["newton"] += int(good.sum())
        for i in np.flatnonzero(~good):
            xg = self._golden(Y[i], np.nan_to_num(X[i]))
            Xi, ok = self._newton(Y[i:i + 1], xg[None, :])
            if ok[0]:
                self.stats["golden"] += 1
                X[i] = Xi[0]
                continue
            xg = self._grid(Y[i], xg)
            Xi, ok = self._newton(Y[i:i + 1], xg[None, :])
            if not ok[0]:
                raise LegendreError(f"Legendre solve failed at y={Y[i]}")
            self.stats["grid"] += 1
            X[i] = Xi[0]
        return X

    def _val(self, Y):
        X = self.maximizer(Y)
        return np.einsum("ni,ni->n", X, Y) - self.psi.value(X)

    def _grad(self, Y):
        return self.maximizer(Y).copy()

    def _hess(self, Y):
        return np.linalg.inv(self.psi.hess(self.maximizer(Y)))

    def fenchel_residual(self, Y) -> np.ndarray:
        """|psi(x*) + L psi(y) - <x*, y>| at the computed maximizers."""
        P, _ = as_points(Y, self.dim)
        X = self.maximizer(P)
        return np.abs(self.psi.value(X) + self._val(P) - np.einsum("ni,ni->n", X, P))


def legendre(psi: ScalarField, support: Optional[Support] = None, x0=None) -> LegendreField:
    return LegendreField(psi, support, x0)


# ---------------------------------------------------------------------------
# Polar function
# ---------------------------------------------------------------------------

@dataclass
class DualPair:
    primal: object
    dual: object
    method: str

    def bipolar_error(self, X) -> float:
        """Max relative deviation of the dual-of-dual potential from the primal one."""
        if isinstance(self.primal, LogConcaveFn):
            back = polar_dual(self.dual)
        else:
            back = s_dual_function(self.dual)
        a = back.potential.value(X)
        b = self.primal.potential.value(X)
        return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def polar_dual(phi: LogConcaveFn, method: str = "auto") -> LogConcaveFn:
    """phi° = exp(-L psi).  Gaussians use the closed form unless
    ``method='pointwise-optimization'``."""
    if method not in ("auto", "closed-form", "pointwise-optimization"):
        raise ValueError(f"unknown polar method {method!r}")
    if phi.closed_form is not None and method in ("auto", "closed-form"):
        A = np.asarray(phi.closed_form["A"])
        C = phi.closed_form["C"]
        out = gaussian(np.linalg.inv(A) / 4.0, 1.0 / C)
        out.name = f"polar[{phi.name}]"
        out.method = "closed-form"
        return out
    if method == "closed-form":
        raise ValueError(f"{phi.name} has no closed-form polar")
    sup = None if isinstance(phi.support, WholeSpace) else phi.support
    L = LegendreField(phi.potential, sup, x0=phi.minimizer)
    y0 = np.zeros(phi.dim)
    if phi.smooth_origin:
        g = phi.potential.grad(np.zeros(phi.dim))
        if np.all(np.isfinite(g)):
            y0 = g
    out = LogConcaveFn(L, None, f"polar[{phi.name}]", None, y0, phi.smooth_origin)
    out.method = "pointwise-optimization"
    return out


def dual_pair(phi, method: str = "auto") -> DualPair:
    if isinstance(phi, SConcaveFn):
        d = s_dual_function(phi)
        return DualPair(phi, d, "grid")
    d = polar_dual(phi, method)
    return DualPair(phi, d, d.method)


# ---------------------------------------------------------------------------
# s-dual
# ---------------------------------------------------------------------------

def _grid_points(support: Support, m: int) -> np.ndarray:
    n = support.dim
    U = np.eye(n)
    hi = support.radial(U) + support.center
    lo = support.center - support.radial(-U)
    axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(m) + 0.5) / m for i in range(n)]
    G = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    return G[support.contains(G)]


def upper_envelope(a: np.ndarray, b: np.ndarray):
    """Upper envelope of the lines y -> a_k y + b_k.

    Returns (indices of the active lines in slope order, breakpoints) so that
    on [bp[j-1], bp[j]] line idx[j] is maximal.
    """
    order = np.lexsort((b, a))
    a, b = a[order], b[order]
    keep = np.ones(len(a), bool)
    keep[:-1] = a[1:] != a[:-1]  # equal slopes: only the largest intercept survives
    order, a, b = order[keep], a[keep], b[keep]
    hull: list = []
    for k in range(len(a)):
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # j is useless if line k overtakes i no later than j does
            if (b[k] - b[i]) * (a[j] - a[i]) >= (b[j] - b[i]) * (a[k] - a[i]):
                hull.pop()
            else:
                break
        hull.append(k)
    h = np.array(hull)
    bp = (b[h[:-1]] - b[h[1:]]) / (a[h[1:]] - a[h[:-1]])
    return order[h], bp


class SDualField(ScalarField):
    """y -> sup_{x in supp} (<x, y> - psi(x)) / (1 - s psi(x)) on (supp)*/s."""

    def __init__(self, psi: ScalarField, s: float, support: Support, grid: Optional[int] = None,
                 name: str = ""):
        self.psi = psi
        self.s = float(s)
        self.psi_support = support
        self.dual_support = support.polar().scaled(1.0 / self.s)
        m = grid or GRID_SDUAL.get(psi.dim, 101)
        self._grid = _grid_points(support, m)
        with np.errstate(all="ignore"):
            self._gpsi = psi.value(self._grid)
        self._envelope = None
        if psi.dim == 1:
            den = 1 - self.s * self._gpsi
            self._envelope = upper_envelope(self._grid[:, 0] / den, -self._gpsi / den)
        self._key = None
        self._sol = None
        super().__init__(psi.dim, self._val, self._grad, self._hess, self.dual_support,
                         name or f"S[{psi.name}]")

    def _ratio(self, X, Y):
        p = self.psi.value(X)
        return (np.einsum("ni,ni->n", X, Y) - p) / (1 - self.s * p)

    def maximizer(self, Y) -> np.ndarray:
        P, single = as_points(Y, self.dim)
        key = P.tobytes()
        if key != self._key:
            self._sol = self._solve(P)
            self._key = key
        return self._sol[0] if single else self._sol

    def _solve(self, Y):
        s = self.s
        if not np.all(self.dual_support.contains(Y)):
            raise ValueError("s-dual evaluated outside (supp)*/s")
        G, gp = self._grid, self._gpsi
        X = np.empty_like(Y)
        den = 1 - s * gp
        if self._envelope is not None:
            idx, bp = self._envelope
            X[:] = G[idx[np.searchsorted(bp, Y[:, 0])]]
        else:
            for sl in _chunks(len(Y), max(1, 2_000_000 // max(1, len(G)))):
                R = (Y[sl] @ G.T - gp[None, :]) / den[None, :]
                X[sl] = G[np.argmax(R, axis=1)]
        # Newton refinement on the stationarity condition
        #   (y - grad psi)(1 - s psi) + s grad psi (<x,y> - psi) = 0
        F = self._ratio(X, Y)
        for _ in range(8):
            p = self.psi.value(X)
            g = self.psi.grad(X)
            H = self.psi.hess(X)
            w = 1 - s * p
            num = np.einsum("ni,ni->n", X, Y) - p
            Gv = (Y - g) * w[:, None] + s * g * num[:, None]
            J = (-H * w[:, None, None] - s * np.einsum("ni,nj->nij", Y - g, g)
                 + s * H * num[:, None, None] + s * np.einsum("ni,nj->nij", g, Y - g))
            try:
                d = np.linalg.solve(J, -Gv[..., None])[..., 0]
            except np.linalg.LinAlgError:
                break
            Xn = X + d
            inside = self.psi_support.contains(Xn)
            Fn = np.full(len(Y), -np.inf)
            if np.any(inside):
                Fn[inside] = self._ratio(Xn[inside], Y[inside])
            acc = inside & (Fn >= F - 1e-14 * np.maximum(1.0, np.abs(F)))
            X[acc] = Xn[acc]
            F[acc] = Fn[acc]
            if np.all(np.linalg.norm(d, axis=1)[acc] < 1e-14) or not np.any(acc):
                break
        return X

    def _val(self, Y):
        return self._ratio(self.maximizer(Y), Y)

    def _grad(self, Y):
        X = self.maximizer(Y)
        return X / (1 - self.s * self.psi.value(X))[:, None]

    def _hess(self, Y):
        s = self.s
        X = self.maximizer(Y)
        p = self.psi.value(X)
        g = self.psi.grad(X)
        H = self.psi.hess(X)
        n = self.dim
        w = 1 - s * p
        D = w + s * np.einsum("ni,ni->n", X, g)
        I = np.eye(n)
        dT = (I[None] - s * np.einsum("ni,nj->nij", g, X) / D[:, None, None]) @ H / D[:, None, None]
        A = I[None] / w[:, None, None] + s * np.einsum("ni,nj->nij", X, g) / (w ** 2)[:, None, None]
        out = A @ np.linalg.inv(dT)
        return 0.5 * (out + np.swapaxes(out, 1, 2))


def s_dual(psi: ScalarField, s: float, supp: Support, grid: Optional[int] = None) -> SDualField:
    return SDualField(psi, s, supp, grid)


def s_dual_function(phi: SConcaveFn, grid: Optional[int] = None) -> SConcaveFn:
    """The s-concave function whose potential is the s-dual of phi's."""
    S = SDualField(phi.potential, phi.s, phi.support, grid)
    return SConcaveFn(phi.s, S, S.dual_support, f"sdual[{phi.name}]")


def t_map(psi: ScalarField, s: float, X):
    """y = grad psi / (1 + s(<grad psi, x> - psi)) and |det dT| at x.

    jac = (1 - s psi) det Hess psi / (1 + s(<grad psi, x> - psi))^{n+1}.
    """
    P, single = as_points(X, psi.dim)
    n = psi.dim
    p = psi.value(P)
    g = psi.grad(P)
    H = psi.hess(P)
    D = 1 + s * (np.einsum("ni,ni->n", g, P) - p)
    if np.any(D <= 0):
        raise ValueError("nonpositive denominator in the change-of-variables map")
    detH = np.linalg.det(H)
    if np.any(detH == 0):
        raise ValueError("singular Hessian in the change-of-variables map")
    Y = g / D[:, None]
    jac = np.abs((1 - s * p) * detH / D ** (n + 1))
    return (Y[0], jac[0]) if single else (Y, jac)
