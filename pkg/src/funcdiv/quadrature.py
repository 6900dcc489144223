"""Numerical integration: adaptive Gauss-Kronrod cubature, Gauss-Hermite rules
for the standard Gaussian measure, and sphere / boundary integrals.

Everything is vectorized over evaluation points.  An integrand is a callable
taking an ``(N, n)`` array of points and returning ``(N,)`` values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Integrand = Callable[[np.ndarray], np.ndarray]

# QUADPACK qk15 abscissae and weights (positive half, last node is 0).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point rule on [-1, 1]
NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1:14:2] = np.concatenate([_WG[:-1], [_WG[-1]], _WG[-2::-1]])

DEFAULT_TOL = {1: 1e-7, 2: 1e-5, 3: 1e-5}


@dataclass
class IntegralResult:
    """Value of an integral with its error bookkeeping.

    ``value`` may be ``+inf`` when a divergence detector fired, in which case
    ``diagnostics`` says why.
    """

    value: float
    error_estimate: float
    evaluations: int
    converged: bool
    diagnostics: str = ""
    extra: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return float(self.value)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def scaled(self, c: float) -> "IntegralResult":
        return IntegralResult(c * self.value, abs(c) * self.error_estimate,
                              self.evaluations, self.converged, self.diagnostics,
                              dict(self.extra))


def combine(results: Sequence[IntegralResult], value: float) -> IntegralResult:
    """Bundle several integrals that together produce ``value``."""
    return IntegralResult(
        value=value,
        error_estimate=float(sum(r.error_estimate for r in results)),
        evaluations=int(sum(r.evaluations for r in results)),
        converged=all(r.converged for r in results),
        diagnostics="; ".join(r.diagnostics for r in results if r.diagnostics),
    )


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    lower: tuple
    upper: tuple
    # optional per-axis interior breakpoints used for the initial partition
    breakpoints: tuple = ()

    @property
    def dim(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class StarDomain:
    """Region {center + r u : 0 <= r < radial(u)} integrated in polar form.

    ``radial`` maps an ``(M, n)`` array of unit vectors to ``(M,)`` radii.
    ``angle_breakpoints`` are azimuths (n = 2) at which the boundary has kinks.
    """

    center: tuple
    radial: Callable[[np.ndarray], np.ndarray]
    dim: int
    angle_breakpoints: tuple = ()
    radial_breakpoints: tuple = ()


def ball(radius: float, center: Optional[Sequence[float]] = None, dim: int = 2) -> StarDomain:
    c = tuple(np.zeros(dim)) if center is None else tuple(float(v) for v in center)
    r = float(radius)
    return StarDomain(c, lambda U: np.full(U.shape[0], r), len(c))


def sphere_points(params: np.ndarray, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors and the spherical surface Jacobian for angle parameters."""
    if dim == 1:
        raise ValueError("use the two-point sphere directly in dimension 1")
    if dim == 2:
        th = params[:, 0]
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.ones_like(th)
    th, ph = params[:, 0], params[:, 1]
    st = np.sin(th)
    U = np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=1)
    return U, st


def sphere_box(dim: int, angle_breakpoints: Sequence[float] = ()) -> Box:
    if dim == 2:
        return Box((0.0,), (2 * math.pi,), (tuple(angle_breakpoints),))
    if dim == 3:
        return Box((0.0, 0.0), (math.pi, 2 * math.pi))
    raise ValueError(f"sphere parametrization implemented for n in {{2, 3}}, got {dim}")


# ---------------------------------------------------------------------------
# Adaptive cubature
# ---------------------------------------------------------------------------

def _rule_points(dim: int):
    """Tensor nodes and the Kronrod / per-axis-Gauss weight tables."""
    grids = np.meshgrid(*([NODES] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wk = [KRONROD_WEIGHTS] * dim
    wK = _tensor(wk)
    wG = _tensor([GAUSS_WEIGHTS] * dim)
    mixed = []
    for axis in range(dim):
        ws = list(wk)
        ws[axis] = GAUSS_WEIGHTS
        mixed.append(_tensor(ws))
    return pts, wK, wG, np.array(mixed)


def _tensor(ws):
    out = ws[0]
    for w in ws[1:]:
        out = np.multiply.outer(out, w)
    return out.ravel()


_RULE_CACHE: dict = {}


def _rule(dim: int):
    if dim not in _RULE_CACHE:
        _RULE_CACHE[dim] = _rule_points(dim)
    return _RULE_CACHE[dim]


def _evaluate(f: Integrand, centers: np.ndarray, halves: np.ndarray, dim: int):
    pts, wK, wG, wmix = _rule(dim)
    m = centers.shape[0]
    X = centers[:, None, :] + halves[:, None, :] * pts[None, :, :]
    vals = np.asarray(f(X.reshape(-1, dim)), dtype=float).reshape(m, -1)
    vol = np.prod(halves, axis=1)
    K = (vals @ wK) * vol
    G = (vals @ wG) * vol
    Kmix = (vals @ wmix.T) * vol[:, None]
    mean = K / (vol * 2.0 ** dim)
    resasc = (np.abs(vals - mean[:, None]) @ wK) * vol
    resabs = (np.abs(vals) @ wK) * vol
    diff = np.abs(K - G)
    # QUADPACK style scaling of the embedded-rule difference
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(resasc > 0, np.minimum(1.0, (200.0 * diff / resasc) ** 1.5), 1.0)
    err = np.where(resasc > 0, resasc * scale, diff)
    err = np.maximum(err, 50.0 * np.finfo(float).eps * resabs)
    axis_err = np.abs(K[:, None] - Kmix)
    bad = ~np.isfinite(K)
    return K, err, axis_err, bad, vals.size


def integrate_box(f: Integrand, box: Box, tol: Optional[float] = None,
                  max_regions: int = 20000, initial: Optional[int] = None,
                  abs_floor: float = 1.0) -> IntegralResult:
    """Adaptive tensor Gauss-Kronrod (7/15) cubature on a box.

    Converged means ``error_estimate <= tol * max(abs_floor, |value|)``.
    """
    dim = box.dim
    if dim > 3:
        raise ValueError("cubature is limited to n <= 3")
    tol = DEFAULT_TOL.get(dim, 1e-5) if tol is None else tol
    lo = np.asarray(box.lower, float)
    hi = np.asarray(box.upper, float)
    edges = []
    for i in range(dim):
        cuts = [lo[i], hi[i]]
        if box.breakpoints and i < len(box.breakpoints):
            cuts += [b for b in box.breakpoints[i] if lo[i] < b < hi[i]]
        k = initial if initial is not None else (4 if dim == 1 else 2)
        cuts += list(np.linspace(lo[i], hi[i], k + 1)[1:-1])
        edges.append(np.unique(np.array(cuts)))
    cells = np.meshgrid(*[np.arange(len(e) - 1) for e in edges], indexing="ij")
    idx = np.stack([c.ravel() for c in cells], axis=1)
    a = np.stack([edges[i][idx[:, i]] for i in range(dim)], axis=1)
    b = np.stack([edges[i][idx[:, i] + 1] for i in range(dim)], axis=1)
    centers = 0.5 * (a + b)
    halves = 0.5 * (b - a)

    with np.errstate(all="ignore"):
        K, err, axerr, bad, nev = _evaluate(f, centers, halves, dim)
    evaluations = nev
    converged = False
    diag = ""
    while True:
        if np.any(bad):
            diag = "non-finite integrand values"
            break
        total = math.fsum(K)
        etot = math.fsum(err)
        if etot <= tol * max(abs_floor, abs(total)):
            converged = True
            break
        if len(K) >= max_regions:
            diag = f"region limit {max_regions} reached"
            break
        # split the smallest set of regions carrying half of the total error
        order = np.lexsort((np.arange(len(err)), -err))
        csum = np.cumsum(err[order])
        nsplit = int(np.searchsorted(csum, 0.5 * etot) + 1)
        nsplit = min(nsplit, max_regions - len(K))
        sel = order[:nsplit]
        keep = np.ones(len(K), bool)
        keep[sel] = False
        axis = np.argmax(axerr[sel], axis=1)
        c_sel = centers[sel]
        h_sel = halves[sel].copy()
        rows = np.arange(nsplit)
        h_sel[rows, axis] *= 0.5
        c1 = c_sel.copy()
        c2 = c_sel.copy()
        c1[rows, axis] -= h_sel[rows, axis]
        c2[rows, axis] += h_sel[rows, axis]
        nc = np.concatenate([c1, c2])
        nh = np.concatenate([h_sel, h_sel])
        with np.errstate(all="ignore"):
            K2, e2, a2, b2, nev = _evaluate(f, nc, nh, dim)
        evaluations += nev
        centers = np.concatenate([centers[keep], nc])
        halves = np.concatenate([halves[keep], nh])
        K = np.concatenate([K[keep], K2])
        err = np.concatenate([err[keep], e2])
        axerr = np.concatenate([axerr[keep], a2])
        bad = np.concatenate([bad[keep], b2])
    value = math.fsum(K) if not np.any(bad) else float("nan")
    return IntegralResult(value, math.fsum(err) if not np.any(bad) else float("inf"),
                          evaluations, converged, diag,
                          {"regions": int(len(K))})


def _star_to_box(f: Integrand, dom: StarDomain, shrink: float = 1.0):
    n = dom.dim
    c = np.asarray(dom.center, float)
    if n == 1:
        rp = float(dom.radial(np.array([[1.0]]))[0]) * shrink
        rm = float(dom.radial(np.array([[-1.0]]))[0]) * shrink
        bps = tuple(c[0] + b for b in dom.radial_breakpoints if -rm < b < rp)
        return (lambda X: f(X)), Box((c[0] - rm,), (c[0] + rp,), (bps,))

    def g(P):
        t = P[:, 0]
        U, jac = sphere_points(P[:, 1:], n)
        R = dom.radial(U) * shrink
        r = t * R
        X = c[None, :] + r[:, None] * U
        return f(X) * R * r ** (n - 1) * jac

    angle_box = sphere_box(n, dom.angle_breakpoints)
    rb = tuple(b for b in dom.radial_breakpoints if 0 < b < 1)
    lower = (0.0,) + angle_box.lower
    upper = (1.0,) + angle_box.upper
    bps = (rb,) + (angle_box.breakpoints if angle_box.breakpoints else tuple(() for _ in angle_box.lower))
    return g, Box(lower, upper, bps)


def integrate(f: Integrand, domain, tol: Optional[float] = None, shrink: float = 1.0,
              **kw) -> IntegralResult:
    """Integrate ``f`` over a ``Box`` or a ``StarDomain``.

    For star domains, the radial coordinate is normalized to [0, 1] and the
    region can be contracted by ``shrink`` (used to stay off a boundary)."""
    if isinstance(domain, Box):
        return integrate_box(f, domain, tol, **kw)
    if isinstance(domain, StarDomain):
        g, box = _star_to_box(f, domain, shrink)
        return integrate_box(g, box, tol, **kw)
    raise TypeError(f"unsupported domain type {type(domain).__name__}")


def integrate_sphere(g: Callable[[np.ndarray], np.ndarray], dim: int,
                     tol: Optional[float] = None,
                     angle_breakpoints: Sequence[float] = (), **kw) -> IntegralResult:
    """Integral over the unit sphere S^{n-1} against surface measure."""
    def h(P):
        U, jac = sphere_points(P, dim)
        return g(U) * jac
    return integrate_box(h, sphere_box(dim, angle_breakpoints), tol, **kw)


def integrate_boundary(K, g: Callable[[np.ndarray], np.ndarray],
                       tol: Optional[float] = None, **kw) -> IntegralResult:
    """Integral of ``g`` over the boundary of a body against surface measure.

    ``K`` must expose ``dim``, ``boundary_geometry(U)`` and ``angle_breakpoints``;
    ``g`` receives boundary points ``(M, n)``.  The chart is the radial map from
    the sphere; surface measure pulls back as rho^{n-1} / <u, N> d sigma.
    """
    def h(U):
        geo = K.boundary_geometry(U)
        return g(geo.x) * geo.surface_jacobian
    return integrate_sphere(h, K.dim, tol, getattr(K, "angle_breakpoints", ()), **kw)


# ---------------------------------------------------------------------------
# Gaussian measure
# ---------------------------------------------------------------------------

def gauss_hermite_rule(order: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor rule for the standard Gaussian probability measure on R^n."""
    if order > 64:
        raise ValueError("Gauss-Hermite order is capped at 64 per axis")
    if dim > 3:
        raise ValueError("tensor Gauss-Hermite limited to n <= 3")
    x, w = np.polynomial.hermite.hermgauss(order)
    x = x * math.sqrt(2.0)
    w = w / math.sqrt(math.pi)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    pts = np.stack([gr.ravel() for gr in grids], axis=1)
    return pts, _tensor([w] * dim)


def integrate_gaussian(g: Integrand, dim: int, order: int = 48) -> float:
    """E[g(X)] for X standard normal in R^n (exact for polynomial degree < 2*order)."""
    pts, w = gauss_hermite_rule(order, dim)
    return float(np.dot(w, np.asarray(g(pts), dtype=float)))


def monte_carlo(g: Integrand, sampler: Callable[[np.random.Generator, int], np.ndarray],
                volume: float, n_samples: int = 10 ** 6, seed: int = 0) -> tuple[float, float]:
    """Antithetic Monte Carlo estimate with its standard error; test oracle only.

    ``sampler(rng, m)`` returns uniform points in a symmetric region of the
    given ``volume``; the antithetic partner of x is -x.
    """
    rng = np.random.default_rng(seed)
    X = sampler(rng, n_samples // 2)
    v = 0.5 * (np.asarray(g(X), float) + np.asarray(g(-X), float))
    return float(volume * v.mean()), float(volume * v.std(ddof=1) / math.sqrt(len(v)))
