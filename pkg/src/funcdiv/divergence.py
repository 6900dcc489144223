"""f-divergences of log-concave and s-concave functions and the functionals
built from them: relative entropy, affine surface areas, Omega and entropy.

For phi = exp(-psi) the two cone densities are
    Q = exp(-psi),   P = exp(psi - <x, grad psi>) det Hess psi,
so log(P/Q) = 2 psi - <x, grad psi> + ln det Hess psi.

For an s-concave phi = (1 - s psi)^{1/s}, with w = 1 - s psi and
D = w + s <x, grad psi>,
    Q = w^{1/s - 1} D,   P = det Hess psi / D^{n + 1/s}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import generators as gen
from . import quadrature as quad
from .funcmodel import LogConcaveFn, SConcaveFn, as_points, unit_directions
from .generators import Generator
from .quadrature import IntegralResult

SHRINK_DELTAS = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
S_TOL = {1: 1e-9, 2: 1e-8, 3: 1e-7}
TAIL_FACTORS = (1.5, 2.0, 3.0, 5.0, 10.0)
TAIL_RATIO = 1e-6


def _logdet(H: np.ndarray) -> np.ndarray:
    sign, ld = np.linalg.slogdet(H)
    return np.where(sign > 0, ld, -np.inf)


@dataclass
class DensityPair:
    """Log-densities of the pair (P, Q) on a quadrature domain.

    ``parts(X)`` returns ``(log P/Q, log Q)``; both may be -inf.
    """

    parts: Callable[[np.ndarray], tuple]
    domain: object
    dim: int
    support: object = None
    name: str = ""

    def log_q(self, X):
        return self.parts(as_points(X, self.dim)[0])[1]

    def log_p(self, X):
        lt, lq = self.parts(as_points(X, self.dim)[0])
        return lt + lq

    def p(self, X):
        return np.exp(self.log_p(X))

    def q(self, X):
        return np.exp(self.log_q(X))

    def swapped(self) -> "DensityPair":
        """The pair (Q, P)."""
        base = self.parts

        def parts(X):
            lt, lq = base(X)
            return -lt, lt + lq
        return DensityPair(parts, self.domain, self.dim, self.support, f"swap[{self.name}]")


def density_pair(phi: LogConcaveFn) -> DensityPair:
    psi = phi.potential
    bounded = phi.support.bounded

    def parts(X):
        p = psi.value(X)
        g = psi.grad(X)
        H = psi.hess(X)
        lt = 2 * p - np.einsum("ni,ni->n", X, g) + _logdet(H)
        lq = -p
        if bounded:
            inside = phi.support.contains(X)
            lq = np.where(inside, lq, -np.inf)
            lt = np.where(inside, lt, 0.0)
        return lt, lq
    return DensityPair(parts, phi.integration_domain(), phi.dim, phi.support, phi.name)


def s_density_pair(phi: SConcaveFn) -> DensityPair:
    s, psi, n = phi.s, phi.potential, phi.dim

    def parts(X):
        inside = phi.support.contains(X)
        p = psi.value(X)
        g = psi.grad(X)
        H = psi.hess(X)
        w = 1 - s * p
        D = w + s * np.einsum("ni,ni->n", X, g)
        with np.errstate(all="ignore"):
            lw, lD = np.log(w), np.log(D)
            lq = (1 / s - 1) * lw + lD
            lt = _logdet(H) + (1 - 1 / s) * lw - (n + 1 / s + 1) * lD
        lq = np.where(inside, lq, -np.inf)
        lt = np.where(inside, lt, 0.0)
        return lt, lq
    return DensityPair(parts, phi.support.domain(), n, phi.support, phi.name)


def _integrand(g: Generator, pair: DensityPair):
    def h(X):
        lt, lq = pair.parts(X)
        v = g.perspective(lt, lq)
        return np.where(np.isneginf(lq), 0.0, v)
    return h


# ---------------------------------------------------------------------------
# divergence detection
# ---------------------------------------------------------------------------

def _tail_divergence(h, phi: LogConcaveFn) -> Optional[str]:
    """Probe the integrand outside the truncation radius.

    Returns a diagnostic if it is non-negligible there (the truncated
    integral would not represent the full one), else None.
    """
    if phi.support.bounded:
        return None
    n = phi.dim
    U = unit_directions(n, 2 if n == 1 else 32)
    c = phi.minimizer
    R = phi.truncation_radius(U)
    ts = np.linspace(0.02, 1.0, 50)
    inner = (c[None, None, :] + (ts[:, None, None] * R[None, :, None]) * U[None, :, :]).reshape(-1, n)
    with np.errstate(all="ignore"):
        vin = np.abs(h(inner))
    peak = float(np.nanmax(vin)) if np.any(np.isfinite(vin)) else 0.0
    fac = np.asarray(TAIL_FACTORS)
    outer = (c[None, None, :] + (fac[:, None, None] * R[None, :, None]) * U[None, :, :]).reshape(-1, n)
    try:
        with np.errstate(all="ignore"):
            vout = np.abs(h(outer))
    except Exception as exc:  # transforms may fail far out; treat as unresolved
        return f"tail probe failed: {exc}"
    if np.any(np.isinf(vout)) or (np.any(np.isnan(vout)) and not np.all(np.isnan(vout))):
        return "integrand is infinite beyond the truncation radius"
    vmax = float(np.nanmax(vout)) if np.any(np.isfinite(vout)) else 0.0
    if vmax > TAIL_RATIO * max(peak, 1e-300):
        return f"integrand tail {vmax:.3g} exceeds {TAIL_RATIO:g} x peak {peak:.3g}"
    return None


def _tail_sign(h, phi: LogConcaveFn) -> float:
    n = phi.dim
    U = unit_directions(n, 2 if n == 1 else 32)
    R = phi.truncation_radius(U)
    X = phi.minimizer + (10.0 * R)[:, None] * U
    with np.errstate(all="ignore"):
        v = h(X)
    s = np.nansum(np.sign(v))
    return -1.0 if s < 0 else 1.0


def df_pair(g: Generator, pair: DensityPair, tol: Optional[float] = None,
            shrink: float = 1.0) -> IntegralResult:
    """D_f(P, Q) = int Q f(P/Q) for a structured density pair."""
    return quad.integrate(_integrand(g, pair), pair.domain, tol, shrink=shrink)


def df_log_concave(g: Generator, phi: LogConcaveFn, tol: Optional[float] = None,
                   validate: bool = True, swap: bool = False) -> IntegralResult:
    """D_f(P_phi, Q_phi) = int e^{-psi} f(e^{2 psi - <x, grad psi>} det Hess psi) dx.

    With ``swap=True`` the roles of P and Q are exchanged.  Non-integrable
    cases return an infinite value with a diagnostic.
    """
    if validate:
        phi.validate()
    pair = density_pair(phi)
    if swap:
        pair = pair.swapped()
    h = _integrand(g, pair)
    diag = _tail_divergence(h, phi)
    if diag is not None:
        return IntegralResult(_tail_sign(h, phi) * math.inf, 0.0, 0, True, "divergent: " + diag)
    res = df_pair(g, pair, tol)
    if not np.isfinite(res.value):
        return IntegralResult(math.inf, 0.0, res.evaluations, True,
                              "divergent: " + (res.diagnostics or "non-finite integral"))
    return res


def _richardson(deltas, values, exps) -> float:
    A = np.column_stack([np.ones(len(deltas))] + [np.asarray(deltas) ** e for e in exps])
    return float(np.linalg.solve(A, np.asarray(values))[0])


def _shrink_extrapolate(values: Sequence[IntegralResult], deltas: Sequence[float],
                        tol: float) -> IntegralResult:
    """Extrapolate I(delta) to delta = 0 assuming an expansion in powers of
    sqrt(delta); boundary singularities of the s-dual integrands produce the
    half-integer terms.  Non-decaying increments signal divergence."""
    v = np.array([r.value for r in values])
    err_q = sum(r.error_estimate for r in values)
    evals = sum(r.evaluations for r in values)
    conv = all(r.converged for r in values)
    extra = {"shrink_values": v.tolist(), "deltas": list(deltas)}
    if not np.all(np.isfinite(v)):
        return IntegralResult(math.inf, 0.0, evals, True, "divergent: non-finite shrink integral", extra)
    scale = max(1.0, abs(v[-1]))
    d = np.diff(v)
    if abs(d[-1]) <= max(tol * scale, 10 * err_q) and abs(d[-2]) <= max(100 * tol * scale, 100 * err_q):
        return IntegralResult(float(v[-1]), err_q + abs(d[-1]), evals, conv, "", extra)
    r = d[-2] / d[-1] if d[-1] != 0 else math.inf
    extra["ratio"] = float(r)
    if r < 1.5:
        sgn = 1.0 if d[-1] > 0 else -1.0
        return IntegralResult(sgn * math.inf, 0.0, evals, True,
                              f"divergent: boundary-shrink increments do not decay (ratio {r:.3g})", extra)
    exps = (0.5, 1.0, 1.5, 2.0)[: len(v) - 1]
    I0 = _richardson(deltas, v, exps)
    I1 = _richardson(deltas[1:], v[1:], exps[:-1])
    diag = "" if r >= 2.5 else f"slow boundary convergence (ratio {r:.3g})"
    return IntegralResult(I0, abs(I0 - I1) + 10 * err_q, evals, conv and r >= 2.5, diag, extra)


def df_s_concave(g: Generator, phi: SConcaveFn, tol: Optional[float] = None,
                 deltas: Sequence[float] = SHRINK_DELTAS, swap: bool = False) -> IntegralResult:
    """D_f^{(s)} on the shrunken supports (1 - delta) supp, extrapolated to delta = 0."""
    pair = s_density_pair(phi)
    if swap:
        pair = pair.swapped()
    t = S_TOL.get(phi.dim, 1e-7) if tol is None else tol
    vals = [df_pair(g, pair, t, shrink=1 - d) for d in deltas]
    return _shrink_extrapolate(vals, deltas, t)


def df(g: Generator, phi, tol: Optional[float] = None, **kw) -> IntegralResult:
    if isinstance(phi, SConcaveFn):
        return df_s_concave(g, phi, tol, **kw)
    return df_log_concave(g, phi, tol, **kw)


# ---------------------------------------------------------------------------
# named functionals
# ---------------------------------------------------------------------------

def total_mass(phi, tol: Optional[float] = None) -> IntegralResult:
    """int phi dx."""
    if isinstance(phi, SConcaveFn):
        t = S_TOL.get(phi.dim, 1e-7) if tol is None else tol
        vals = [phi.integral(1 - d, t) for d in SHRINK_DELTAS]
        return _shrink_extrapolate(vals, SHRINK_DELTAS, t)
    return phi.integral(tol)


def kl_divergence(phi: LogConcaveFn, tol: Optional[float] = None) -> IntegralResult:
    """Relative entropy int P ln(P/Q) of the cone densities."""
    return df_log_concave(gen.tlogt(), phi, tol)


def log_divergence(phi: LogConcaveFn, tol: Optional[float] = None) -> IntegralResult:
    """int phi ln(P/Q) dx, the form in which relative entropy of the cone
    measures enters the entropy identities and Omega."""
    return df_log_concave(gen.log(), phi, tol)


def affine_surface_area(phi: LogConcaveFn, lam: float, tol: Optional[float] = None) -> IntegralResult:
    """as_lambda = int Q (P/Q)^lambda."""
    return df_log_concave(gen.power(lam), phi, tol)


def entropy(phi: LogConcaveFn, tol: Optional[float] = None) -> IntegralResult:
    """Ent(phi) = int phi ln phi dx."""
    psi = phi.potential
    bounded = phi.support.bounded

    def h(X):
        p = psi.value(X)
        v = -p * np.exp(-p)
        if bounded:
            v = np.where(phi.support.contains(X), v, 0.0)
        return v
    return quad.integrate(h, phi.integration_domain(), tol)


def center_of_mass(phi: LogConcaveFn, tol: Optional[float] = None) -> np.ndarray:
    m = phi.integral(tol).value
    out = np.empty(phi.dim)
    for i in range(phi.dim):
        out[i] = quad.integrate(lambda X, i=i: X[:, i] * phi(X), phi.integration_domain(), tol).value / m
    return out


@dataclass
class ExtremeResult:
    value: float
    argmax: np.ndarray
    diagnostics: str = ""


def _log_ratio(phi: LogConcaveFn):
    pair = density_pair(phi)
    return lambda X: pair.parts(X)[0]


def as_extreme(phi: LogConcaveFn, sign: float = math.inf, grid: int = 0) -> ExtremeResult:
    """as_{+inf} = sup P/Q and as_{-inf} = inf Q/P over the truncated support.

    Dense grid over the truncation region then local refinement from the best
    grid point.  An unbounded ratio (still growing at the truncation radius)
    yields an infinite value with a diagnostic.
    """
    from scipy.optimize import minimize

    L = _log_ratio(phi)
    n = phi.dim
    c = phi.minimizer
    m = grid or {1: 4001, 2: 301, 3: 61}[n]
    U = unit_directions(n, 2 if n == 1 else 64)
    R = float(phi.truncation_radius(U).max())
    axes = [np.linspace(c[i] - R, c[i] + R, m) for i in range(n)]
    G = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    if phi.support.bounded:
        G = G[phi.support.contains(G)]
    with np.errstate(all="ignore"):
        v = L(G)
    v = np.where(np.isnan(v), -np.inf, v)
    k = int(np.argmax(v))
    x0 = G[k]
    diag = ""
    dist = np.max(np.abs(G - c), axis=1)
    inner = dist < R * (1 - 2.0 / m)
    edge = not inner[k]
    if edge and np.any(inner):
        # a flat ratio (Gaussians) peaks everywhere; only growth toward the edge counts
        ki = int(np.flatnonzero(inner)[np.argmax(v[inner])])
        if v[k] - v[ki] <= 1e-9 * (1 + abs(v[ki])):
            k, x0, edge = ki, G[ki], False
    if edge:
        return ExtremeResult(math.inf if sign > 0 else 0.0, x0,
                             "unbounded density ratio: maximum at the truncation boundary")
    res = minimize(lambda x: -float(L(x[None, :])[0]), x0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    best = max(float(-res.fun), float(v[k]))
    xb = res.x if -res.fun >= v[k] else x0
    val = math.exp(best)
    return ExtremeResult(val if sign > 0 else 1.0 / val, xb, diag)


@dataclass
class OmegaResult:
    value: float
    log_divergence: float
    mass: float
    ladder: dict = field(default_factory=dict)
    error_estimate: float = 0.0
    converged: bool = True

    def __float__(self):
        return float(self.value)


def omega(phi: LogConcaveFn, lambdas: Sequence[float] = (0.2, 0.1, 0.05, -0.2, -0.1, -0.05),
          tol: Optional[float] = None) -> OmegaResult:
    """Omega = exp(int phi ln(P/Q) / int phi) with the finite-lambda ladder
    (as_lambda / int phi)^{1/lambda}."""
    ld = log_divergence(phi, tol)
    m = total_mass(phi, tol)
    val = math.exp(ld.value / m.value) if np.isfinite(ld.value) else (math.inf if ld.value > 0 else 0.0)
    ladder = {}
    errs = ld.error_estimate + m.error_estimate
    conv = ld.converged and m.converged
    for lam in lambdas:
        a = affine_surface_area(phi, lam, tol)
        conv = conv and a.converged
        if np.isfinite(a.value):
            ladder[lam] = (a.value / m.value) ** (1.0 / lam)
        else:
            ladder[lam] = math.inf if lam > 0 else 0.0
    return OmegaResult(val, ld.value, m.value, ladder, errs, conv)
