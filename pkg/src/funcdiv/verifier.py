"""Named numerical checks of identities and inequalities, each producing a
CheckReport.

Identities pass when |lhs - rhs| <= tol * max(1, |lhs|, |rhs|).  Inequalities
are reported as margin = (larger side) - (smaller side) and pass when
margin >= -tol, where tol is the stated slack plus ten times the summed
quadrature error estimates.  A check never passes on an unconverged integral.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import bodygeom as bg
from . import divergence as dv
from . import quadrature as quad
from . import transforms as tr
from .funcmodel import LogConcaveFn, ScalarField, SConcaveFn
from .generators import Generator, power
from .quadrature import IntegralResult

Num = Union[float, IntegralResult]

ID_TOL = 1e-4
CLOSED_TOL = 1e-6
ERR_FACTOR = 10.0


@dataclass
class CheckReport:
    check_id: str
    subject: str
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    passed: bool
    kind: str = "identity"
    diagnostics: str = ""
    extra: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        for k in ("lhs", "rhs", "margin"):
            d[k] = _json_float(d[k])
        return d


def _json_float(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _val(x: Num) -> float:
    return float(x.value) if isinstance(x, IntegralResult) else float(x)


def _err(x: Num) -> float:
    return float(x.error_estimate) if isinstance(x, IntegralResult) else 0.0


def _conv(x: Num) -> bool:
    return bool(x.converged) if isinstance(x, IntegralResult) else True


def _diag(parts: Sequence[Num]) -> str:
    out = [p.diagnostics for p in parts if isinstance(p, IntegralResult) and p.diagnostics]
    return "; ".join(dict.fromkeys(out))


def identity(check_id: str, subject: str, lhs: Num, rhs: Num, tol: float = ID_TOL,
             parts: Sequence[Num] = (), extra: Optional[dict] = None, note: str = "") -> CheckReport:
    a, b = _val(lhs), _val(rhs)
    allparts = [lhs, rhs, *parts]
    conv = all(_conv(p) for p in allparts)
    if math.isinf(a) or math.isinf(b):
        ok = a == b
        margin = 0.0 if ok else math.inf
    else:
        margin = abs(a - b)
        ok = margin <= tol * max(1.0, abs(a), abs(b))
    diag = "; ".join(x for x in (note, _diag(allparts), "" if conv else "unconverged quadrature") if x)
    return CheckReport(check_id, subject, a, b, margin, tol, ok and conv, "identity", diag, extra or {})


def inequality(check_id: str, subject: str, big: Num, small: Num, slack: float = 0.0,
               parts: Sequence[Num] = (), extra: Optional[dict] = None, note: str = "",
               relative_slack: bool = True) -> CheckReport:
    """Checks big >= small.  lhs/rhs are reported as (big, small)."""
    a, b = _val(big), _val(small)
    allparts = [big, small, *parts]
    conv = all(_conv(p) for p in allparts)
    scale = max(1.0, abs(a), abs(b)) if relative_slack and np.isfinite(a) and np.isfinite(b) else 1.0
    tol = slack * scale + ERR_FACTOR * sum(_err(p) for p in allparts)
    if a == math.inf or b == -math.inf:
        margin = math.inf
    elif math.isnan(a) or math.isnan(b) or a == -math.inf or b == math.inf:
        margin = -math.inf
    else:
        margin = a - b
    ok = margin >= -tol
    diag = "; ".join(x for x in (note, _diag(allparts), "" if conv else "unconverged quadrature") if x)
    return CheckReport(check_id, subject, a, b, margin, tol, ok and conv, "inequality", diag, extra or {})


def propagate(fun: Callable[..., float], parts: Sequence[IntegralResult]) -> IntegralResult:
    """fun(values) with an error bound from perturbing each input by its error estimate."""
    v = [p.value for p in parts]
    base = float(fun(*v))
    err = 0.0
    for i, p in enumerate(parts):
        for sgn in (-1.0, 1.0):
            w = list(v)
            w[i] = v[i] + sgn * p.error_estimate
            with np.errstate(all="ignore"):
                d = abs(float(fun(*w)) - base)
            if np.isfinite(d):
                err += d / 2
    return IntegralResult(base, err, 0, all(p.converged for p in parts),
                          _diag(parts))


def _name(x) -> str:
    return getattr(x, "name", None) or repr(x)


def _dual(phi):
    if isinstance(phi, SConcaveFn):
        return tr.s_dual_function(phi)
    return tr.polar_dual(phi)


def _subject(phi, g: Optional[Generator] = None) -> str:
    return f"{_name(phi)} | f={g.name}" if g is not None else _name(phi)


# ---------------------------------------------------------------------------
# duality
# ---------------------------------------------------------------------------

def check_duality(g: Generator, phi, tol: float = ID_TOL, quad_tol: Optional[float] = None) -> CheckReport:
    """D_f(dual) against D_{f*}(primal)."""
    lhs = dv.df(g, _dual(phi), quad_tol)
    rhs = dv.df(g.adjoint(), phi, quad_tol)
    return identity("check_duality", _subject(phi, g), lhs, rhs, tol)


def check_as_duality(phi: LogConcaveFn, lam: float, tol: float = ID_TOL,
                     quad_tol: Optional[float] = None) -> CheckReport:
    """as_lam(phi) against as_{1-lam}(phi°)."""
    lhs = dv.affine_surface_area(phi, lam, quad_tol)
    rhs = dv.affine_surface_area(tr.polar_dual(phi), 1 - lam, quad_tol)
    return identity("check_as_duality", f"{_name(phi)} | lambda={lam:g}", lhs, rhs, tol)


def check_s_identity(phi: SConcaveFn, form: str = "stated", tol: float = ID_TOL,
                     quad_tol: Optional[float] = None) -> CheckReport:
    """The f = 1 case of s-duality.

    form="stated": (1 + s n) int phi*_(s) against int P_phi, which drops the
    boundary term of the dual and needs phi*_(s)^s -> 0 on its support boundary.
    form="duality": D_1(phi*_(s)) = int Q of the dual, against int P_phi.
    """
    dual = tr.s_dual_function(phi)
    rhs = dv.df(power(1.0), phi, quad_tol)
    if form == "stated":
        m = dual.integral(tol=quad_tol)
        lhs = m.scaled(1 + phi.s * phi.dim)
    elif form == "duality":
        lhs = dv.df(power(0.0), dual, quad_tol)
    else:
        raise ValueError(f"unknown form {form!r}")
    return identity("check_s_identity", f"{_name(phi)} | form={form}", lhs, rhs, tol,
                    extra={"form": form})


# ---------------------------------------------------------------------------
# Jensen-type lower bounds
# ---------------------------------------------------------------------------

def _oriented(check_id, subject, g, lhs, rhs, slack, parts, extra):
    if g.shape == "linear":
        return identity(check_id, subject, lhs, rhs, CLOSED_TOL, parts, extra,
                        note="linear f: equality")
    if g.is_convex:
        return inequality(check_id, subject, lhs, rhs, slack, parts, extra)
    return inequality(check_id, subject, rhs, lhs, slack, parts, extra, note="concave f: reversed")


def check_jensen_bound(g: Generator, phi, form: str = "stated", slack: float = 0.0,
                       quad_tol: Optional[float] = None) -> CheckReport:
    """D_f(phi) >= (int Q) f(int P / int Q), reversed for concave f.

    Log-concave phi: int Q = int phi, int P = int phi°.
    s-concave phi, form="stated": int Q = (1 + n s) int phi, and the ratio is
    int phi*_(s) / int phi.  form="mass": int P = D_id and int Q = D_1
    evaluated directly.
    """
    lhs = dv.df(g, phi, quad_tol)
    if isinstance(phi, SConcaveFn):
        if form == "stated":
            c = 1 + phi.dim * phi.s
            parts = [phi.integral(tol=quad_tol), tr.s_dual_function(phi).integral(tol=quad_tol)]
            rhs = propagate(lambda m, md: c * m * float(g(md / m)), parts)
        elif form == "mass":
            parts = [dv.df(power(0.0), phi, quad_tol), dv.df(power(1.0), phi, quad_tol)]
            rhs = propagate(lambda mq, mp: mq * float(g(mp / mq)), parts)
        else:
            raise ValueError(f"unknown form {form!r}")
    else:
        parts = [dv.total_mass(phi, quad_tol), dv.total_mass(tr.polar_dual(phi), quad_tol)]
        rhs = propagate(lambda m, md: m * float(g(md / m)), parts)
    return _oriented("check_jensen_bound", f"{_subject(phi, g)} | form={form}", g, lhs, rhs,
                     slack, (), {"form": form})


def check_gaussian_closed_form(g: Generator, phi: LogConcaveFn, tol: float = CLOSED_TOL,
                               quad_tol: Optional[float] = None) -> CheckReport:
    """Numeric D_f of C e^{-<Ax,x>} against f(2^n det A / C^2) * int phi."""
    if phi.closed_form is None:
        raise ValueError("subject carries no closed form (A, C)")
    A = np.asarray(phi.closed_form["A"], float)
    C = float(phi.closed_form["C"])
    n = phi.dim
    mass = C * math.pi ** (n / 2) / math.sqrt(np.linalg.det(A))
    exact = float(g(2 ** n * np.linalg.det(A) / C ** 2)) * mass
    num = dv.df(g, phi, quad_tol if quad_tol is not None else 1e-9)
    return identity("check_gaussian_closed_form", _subject(phi, g), num, exact, tol)


# ---------------------------------------------------------------------------
# relative entropy bounds
# ---------------------------------------------------------------------------

def check_kl_bound(phi: LogConcaveFn, centered: bool = False, slack: float = 0.0,
                   quad_tol: Optional[float] = None) -> CheckReport:
    """int phi ln(P/Q) <= (int phi) ln(int phi° / int phi); with centered=True the
    dual mass is replaced by (2 pi)^n / int phi after moving the barycenter to 0."""
    extra = {"centered": centered}
    if centered:
        c = dv.center_of_mass(phi, quad_tol)
        extra["center_of_mass"] = c.tolist()
        if np.max(np.abs(c)) > 1e-10:
            phi = phi.translate(c)
    ld = dv.log_divergence(phi, quad_tol)
    m = dv.total_mass(phi, quad_tol)
    if centered:
        rhs = propagate(lambda mm: mm * math.log((2 * math.pi) ** phi.dim / mm ** 2), [m])
    else:
        md = dv.total_mass(tr.polar_dual(phi), quad_tol)
        rhs = propagate(lambda mm, mdd: mm * math.log(mdd / mm), [m, md])
    return inequality("check_kl_bound", f"{_name(phi)} | centered={centered}", rhs, ld, slack,
                      extra=extra)


def check_entropy_identity(phi: LogConcaveFn, tol: float = CLOSED_TOL,
                           quad_tol: Optional[float] = None) -> CheckReport:
    """int phi ln(P/Q) = -2 Ent(phi) - n int phi + int phi ln det Hess psi."""
    qt = quad_tol if quad_tol is not None else 1e-9
    ld = dv.log_divergence(phi, qt)
    ent = dv.entropy(phi, qt)
    m = dv.total_mass(phi, qt)
    psi = phi.potential

    def h(X):
        return np.exp(-psi.value(X)) * np.linalg.slogdet(psi.hess(X))[1]
    ldet = quad.integrate(h, phi.integration_domain(), qt)
    rhs = IntegralResult(-2 * ent.value - phi.dim * m.value + ldet.value,
                         2 * ent.error_estimate + phi.dim * m.error_estimate + ldet.error_estimate,
                         0, ent.converged and m.converged and ldet.converged)
    return identity("check_entropy_identity", _name(phi), ld, rhs, tol)


# ---------------------------------------------------------------------------
# monotonicity in lambda and the Omega invariant
# ---------------------------------------------------------------------------

def check_monotonicity(phi: LogConcaveFn, clause: str, params: Sequence[float],
                       slack: float = 1e-8, quad_tol: Optional[float] = None) -> CheckReport:
    """Hoelder-type interpolation bounds between affine surface areas.

    clause "i":   (alpha, beta, lam) with 1 <= (alpha-beta)/(lam-beta) < inf,
                  as_lam <= as_alpha^{(lam-beta)/(alpha-beta)} as_beta^{(alpha-lam)/(alpha-beta)}
    clause "ii":  (alpha, lam), as_lam <= as_alpha^{lam/alpha} (int phi)^{(alpha-lam)/alpha}
    clause "iii": (beta, lam) with beta <= lam, as_lam <= as_inf^{lam-beta} as_beta
    """
    p = [float(v) for v in params]
    if clause == "i":
        al, be, la = p
        r = (al - be) / (la - be)
        if not 1 <= r < math.inf:
            raise ValueError("clause i needs 1 <= (alpha-beta)/(lambda-beta) < inf")
        A = dv.affine_surface_area(phi, la, quad_tol)
        Ba = dv.affine_surface_area(phi, al, quad_tol)
        Bb = dv.affine_surface_area(phi, be, quad_tol)
        th = (la - be) / (al - be)
        rhs = propagate(lambda a, b: a ** th * b ** (1 - th), [Ba, Bb])
    elif clause == "ii":
        al, la = p
        if not 1 <= al / la < math.inf:
            raise ValueError("clause ii needs 1 <= alpha/lambda < inf")
        A = dv.affine_surface_area(phi, la, quad_tol)
        Ba = dv.affine_surface_area(phi, al, quad_tol)
        m = dv.total_mass(phi, quad_tol)
        rhs = propagate(lambda a, mm: a ** (la / al) * mm ** ((al - la) / al), [Ba, m])
    elif clause == "iii":
        be, la = p
        if be > la:
            raise ValueError("clause iii needs beta <= lambda")
        A = dv.affine_surface_area(phi, la, quad_tol)
        Bb = dv.affine_surface_area(phi, be, quad_tol)
        ext = dv.as_extreme(phi, math.inf)
        rhs = propagate(lambda b: ext.value ** (la - be) * b, [Bb])
    else:
        raise ValueError(f"unknown clause {clause!r}")
    return inequality("check_monotonicity", f"{_name(phi)} | clause={clause} params={p}",
                      rhs, A, slack, extra={"clause": clause, "params": p})


def _ladder(phi, lambdas, quad_tol):
    m = dv.total_mass(phi, quad_tol)
    out = []
    for lam in lambdas:
        a = dv.affine_surface_area(phi, lam, quad_tol)
        out.append((lam, (a.value / m.value) ** (1 / lam), a))
    return m, out


def check_ladder(phi: LogConcaveFn, lambdas: Sequence[float] = (-0.5, -0.2, -0.1, 0.1, 0.2, 0.5, 1.0, 2.0),
                 slack: float = 1e-8, quad_tol: Optional[float] = None) -> CheckReport:
    """lambda -> (as_lambda / int phi)^{1/lambda} is nondecreasing on each side of 0."""
    lams = sorted(float(v) for v in lambdas)
    m, lad = _ladder(phi, lams, quad_tol)
    worst = math.inf
    wpair = None
    errs = m.error_estimate
    for (l1, v1, a1), (l2, v2, a2) in zip(lad, lad[1:]):
        errs += a1.error_estimate + a2.error_estimate
        if l1 < 0 < l2:
            continue
        d = v2 - v1
        if d < worst:
            worst, wpair = d, (l1, l2)
    tol = slack * max(1.0, max(abs(v) for _, v, _ in lad)) + ERR_FACTOR * errs
    conv = m.converged and all(a.converged for *_, a in lad)
    vals = {str(l): v for l, v, _ in lad}
    return CheckReport("check_ladder", _name(phi), worst, 0.0, worst, tol, worst >= -tol and conv,
                       "inequality", f"tightest step {wpair}", {"ladder": vals})


def check_omega(phi: LogConcaveFn, lambdas: Sequence[float] = (0.2, 0.1, 0.05),
                slack: float = 1e-8, quad_tol: Optional[float] = None) -> CheckReport:
    """Finite-lambda ladder against Omega = exp(int phi ln(P/Q) / int phi).

    Requires: ladder values above Omega for lambda > 0 (below for lambda < 0)
    and the gap nonincreasing as |lambda| decreases.  margin is the worst
    violation of either requirement.
    """
    om = dv.omega(phi, lambdas=tuple(lambdas), tol=quad_tol)
    lams = sorted(lambdas, key=lambda v: -abs(v))
    tol = slack * max(1.0, om.value) + ERR_FACTOR * om.error_estimate * max(1.0, om.value)
    worst = math.inf
    gaps = []
    for lam in lams:
        v = om.ladder[lam]
        gap = (v - om.value) if lam > 0 else (om.value - v)
        gaps.append(gap)
        worst = min(worst, gap)
    for g1, g2 in zip(gaps, gaps[1:]):
        worst = min(worst, g1 - g2)
    return CheckReport("check_omega", _name(phi), om.value, om.ladder[lams[-1]], worst, tol,
                       worst >= -tol and om.converged, "inequality",
                       "", {"ladder": {str(k): v for k, v in om.ladder.items()}, "gaps": gaps})


def check_omega_product(phi: LogConcaveFn, slack: float = 1e-8,
                        quad_tol: Optional[float] = None) -> CheckReport:
    """Omega_phi * Omega_{phi°} <= 1."""
    a = dv.omega(phi, lambdas=(), tol=quad_tol)
    b = dv.omega(tr.polar_dual(phi), lambdas=(), tol=quad_tol)
    prod = a.value * b.value
    err = prod * (a.error_estimate + b.error_estimate)
    return inequality("check_omega_product", _name(phi), IntegralResult(1.0, 0.0, 0, True),
                      IntegralResult(prod, err, 0, a.converged and b.converged), slack,
                      extra={"omega": a.value, "omega_dual": b.value})


# ---------------------------------------------------------------------------
# equi-affine invariance and the valuation property
# ---------------------------------------------------------------------------

def check_invariance(g: Generator, phi: LogConcaveFn, T, tol: float = ID_TOL,
                     quad_tol: Optional[float] = None) -> CheckReport:
    T = np.asarray(T, float)
    if not np.allclose(T, T.T, atol=1e-14):
        raise ValueError("T must be symmetric")
    if abs(np.linalg.det(T) - 1) > 1e-12:
        raise ValueError("T must have determinant 1")
    lhs = dv.df(g, phi.compose(T), quad_tol)
    rhs = dv.df(g, phi, quad_tol)
    return identity("check_invariance", f"{_subject(phi, g)} | T={np.round(T, 6).tolist()}", lhs, rhs, tol)


def pointwise_extreme(phi1: LogConcaveFn, phi2: LogConcaveFn, which: str) -> LogConcaveFn:
    """max (which="max") or min of two functions, derivatives taken from the active piece."""
    p1, p2 = phi1.potential, phi2.potential
    pick = (lambda a, b: a <= b) if which == "max" else (lambda a, b: a >= b)

    def sel(a1, a2, m):
        shape = (-1,) + (1,) * (a1.ndim - 1)
        return np.where(m.reshape(shape), a1, a2)

    def val(X):
        a, b = p1.value(X), p2.value(X)
        return np.where(pick(a, b), a, b)

    def grad(X):
        return sel(p1.grad(X), p2.grad(X), pick(p1.value(X), p2.value(X)))

    def hess(X):
        return sel(p1.hess(X), p2.hess(X), pick(p1.value(X), p2.value(X)))
    field_ = ScalarField(phi1.dim, val, grad, hess, None, f"{which}({p1.name},{p2.name})")
    return LogConcaveFn(field_, None, f"{which}({phi1.name},{phi2.name})")


def check_valuation(g: Generator, phi1: LogConcaveFn, phi2: LogConcaveFn, tol: float = 1e-10,
                    quad_tol: Optional[float] = None) -> CheckReport:
    """D(phi1) + D(phi2) = D(max) + D(min) for a nested pair phi1 <= phi2."""
    rng = np.random.default_rng(0)
    X = np.concatenate([phi1.sample(rng, 200), phi2.sample(rng, 200)])
    if np.any(phi1(X) > phi2(X) * (1 + 1e-12)) and np.any(phi2(X) > phi1(X) * (1 + 1e-12)):
        raise ValueError("valuation check implemented for nested pairs only")
    qt = quad_tol if quad_tol is not None else 1e-10
    parts = [dv.df(g, f, qt) for f in (phi1, phi2, pointwise_extreme(phi1, phi2, "max"),
                                       pointwise_extreme(phi1, phi2, "min"))]
    lhs = IntegralResult(parts[0].value + parts[1].value, 0.0, 0, parts[0].converged and parts[1].converged)
    rhs = IntegralResult(parts[2].value + parts[3].value, 0.0, 0, parts[2].converged and parts[3].converged)
    return identity("check_valuation", f"{_name(phi1)}, {_name(phi2)} | f={g.name}", lhs, rhs, tol)


# ---------------------------------------------------------------------------
# s -> 0
# ---------------------------------------------------------------------------

def check_s_limit(g: Generator, phi: LogConcaveFn, ladder: Sequence[float] = (0.2, 0.1, 0.05),
                  final_tol: float = 1e-2, quad_tol: Optional[float] = None) -> CheckReport:
    """D_f of the s-approximations (1 - s psi)_+^{1/s} against D_f(phi).

    Passes when the relative errors strictly decrease along the ladder and the
    last one is at most final_tol.
    """
    from .funcmodel import s_approximation
    target = dv.df(g, phi, quad_tol)
    errs, vals, parts = [], [], [target]
    for s in ladder:
        r = dv.df(g, s_approximation(phi, s), quad_tol)
        parts.append(r)
        vals.append(r.value)
        errs.append(abs(r.value - target.value) / max(1.0, abs(target.value)))
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    conv = all(p.converged for p in parts)
    ok = decreasing and errs[-1] <= final_tol and conv
    return CheckReport("check_s_limit", _subject(phi, g), vals[-1], target.value, errs[-1], final_tol,
                       ok, "limit", "" if decreasing else "errors not strictly decreasing",
                       {"ladder": list(map(float, ladder)), "values": vals, "errors": errs})


# ---------------------------------------------------------------------------
# convex bodies
# ---------------------------------------------------------------------------

def check_body_duality(g: Generator, K: bg.ConvexBody, tol: float = ID_TOL,
                       quad_tol: Optional[float] = None) -> CheckReport:
    """D_f(K°) = D_{f*}(K)."""
    lhs = bg.df_body(g, bg.polar_body(K), quad_tol)
    rhs = bg.df_body(g.adjoint(), K, quad_tol)
    return identity("check_body_duality", f"{K.name} | f={g.name}", lhs, rhs, tol)


def check_body_jensen(g: Generator, K: bg.ConvexBody, slack: float = 0.0,
                      quad_tol: Optional[float] = None) -> CheckReport:
    """D_f(K) >= n |K| f(|K°| / |K|), reversed for concave f."""
    lhs = bg.df_body(g, K, quad_tol)
    rhs = propagate(lambda v, vp: K.dim * v * float(g(vp / v)), [K.volume(), bg.polar_body(K).volume()])
    return _oriented("check_body_jensen", f"{K.name} | f={g.name}", g, lhs, rhs, slack, (), {})


def check_body_bridge(g: Generator, K: bg.ConvexBody, tol: float = ID_TOL,
                      quad_tol: Optional[float] = None) -> CheckReport:
    """D_f(phi_K) = (2 pi)^{n/2} / (n |B^n|) * D_f(K) with phi_K = exp(-|x|_K^2 / 2)."""
    n = K.dim
    c = (2 * math.pi) ** (n / 2) / (n * bg.unit_ball_volume(n))
    lhs = dv.df(g, bg.body_to_function(K), quad_tol)
    rhs = bg.df_body(g, K, quad_tol).scaled(c)
    return identity("check_body_bridge", f"{K.name} | f={g.name}", lhs, rhs, tol, extra={"factor": c})


def check_curvature(K: bg.ConvexBody, points: int = 50, tol: float = ID_TOL, seed: int = 0) -> CheckReport:
    """Curvature from det Hess(g^2/2) <x,N>^{n+1} against an independent oracle."""
    if K.oracle_curvature is None:
        raise ValueError(f"{K.name} has no curvature oracle")
    U = np.random.default_rng(seed).standard_normal((points, K.dim))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    a = K.boundary_geometry(U).kappa
    b = K.oracle_curvature(U)
    rel = np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    k = int(np.argmax(rel))
    return CheckReport("check_curvature", f"{K.name} | points={points}", float(a[k]), float(b[k]),
                       float(rel[k]), tol, bool(rel[k] <= tol), "identity", "worst boundary point",
                       {"max_rel_error": float(rel[k])})


def check_lift(g: Generator, phi: SConcaveFn, tol: float = ID_TOL,
               quad_tol: Optional[float] = None) -> CheckReport:
    """D_f(phi) = D_f(K_1(phi)) / 2 at s = 1, n = 1."""
    K = bg.lift_body(phi)
    lhs = dv.df(g, phi, quad_tol)
    factor = bg.lift_factor(phi.s, phi.dim)
    rhs = bg.df_body(g, K, quad_tol).scaled(1.0 / factor)
    return identity("check_lift", f"{_name(phi)} | f={g.name}", lhs, rhs, tol, extra={"factor": factor})


# ---------------------------------------------------------------------------
# linearization at the standard Gaussian
# ---------------------------------------------------------------------------

@dataclass
class EvenFunction:
    """An even C^2 test function with value, gradient, Hessian on (N, n) batches."""
    dim: int
    value: Callable
    grad: Callable
    hess: Callable
    name: str = ""


def quadratic_eta(B) -> EvenFunction:
    B = np.atleast_2d(np.asarray(B, float))
    B = 0.5 * (B + B.T)
    n = B.shape[0]
    return EvenFunction(n, lambda X: np.einsum("ni,ij,nj->n", X, B, X), lambda X: 2 * X @ B,
                        lambda X: np.broadcast_to(2 * B, (len(X), n, n)), f"<Bx,x> B={B.tolist()}")


def constant_eta(c: float = 1.0, dim: int = 1) -> EvenFunction:
    return EvenFunction(dim, lambda X: np.full(len(X), c), lambda X: np.zeros_like(X),
                        lambda X: np.zeros((len(X), dim, dim)), f"const {c:g}")


def trig_eta(amps, freqs, B=None, quartic: float = 0.0) -> EvenFunction:
    """sum_j a_j cos(<w_j, x>) + <Bx, x> + c |x|^4."""
    a = np.asarray(amps, float)
    W = np.atleast_2d(np.asarray(freqs, float))
    n = W.shape[1]
    Bm = np.zeros((n, n)) if B is None else 0.5 * (np.asarray(B, float) + np.asarray(B, float).T)
    c = float(quartic)

    def val(X):
        r2 = np.einsum("ni,ni->n", X, X)
        return np.cos(X @ W.T) @ a + np.einsum("ni,ij,nj->n", X, Bm, X) + c * r2 ** 2

    def grad(X):
        r2 = np.einsum("ni,ni->n", X, X)
        return -(np.sin(X @ W.T) * a) @ W + 2 * X @ Bm + 4 * c * r2[:, None] * X

    def hess(X):
        r2 = np.einsum("ni,ni->n", X, X)
        C = np.cos(X @ W.T) * a
        H = -np.einsum("nj,ji,jk->nik", C, W, W) + 2 * Bm[None]
        H += 4 * c * (r2[:, None, None] * np.eye(n)[None] + 2 * np.einsum("ni,nj->nij", X, X))
        return H
    return EvenFunction(n, val, grad, hess, f"trig(a={a.round(4).tolist()})")


def random_even_eta(seed: int, dim: int = 1) -> EvenFunction:
    rng = np.random.default_rng(seed)
    k = 3
    amps = rng.uniform(-1, 1, k)
    freqs = rng.uniform(-1.5, 1.5, (k, dim))
    M = rng.uniform(-0.5, 0.5, (dim, dim))
    quartic = rng.uniform(0, 0.1)
    eta = trig_eta(amps, freqs, M, quartic)
    eta.name = f"random_even(seed={seed}, n={dim})"
    return eta


def cos_rational_eta() -> EvenFunction:
    """cos(x) / (1 + x^2) in one variable."""
    def val(X):
        x = X[:, 0]
        return np.cos(x) / (1 + x ** 2)

    def grad(X):
        x = X[:, 0]
        d = 1 + x ** 2
        return (-np.sin(x) / d - 2 * x * np.cos(x) / d ** 2)[:, None]

    def hess(X):
        x = X[:, 0]
        d = 1 + x ** 2
        h = (-np.cos(x) / d + 4 * x * np.sin(x) / d ** 2
             + np.cos(x) * (6 * x ** 2 - 2) / d ** 3)
        return h[:, None, None]
    return EvenFunction(1, val, grad, hess, "cos(x)/(1+x^2)")


LINEARIZATION_VARIANTS = ("i", "ii-left", "ii-right", "poincare")


def gaussian_moments(eta: EvenFunction, order: int = 48) -> dict:
    """Gaussian expectations entering the linearized inequalities."""
    def E(fun):
        return quad.integrate_gaussian(fun, eta.dim, order)

    def L(X):
        return np.trace(eta.hess(X), axis1=1, axis2=2) - np.einsum("ni,ni->n", eta.grad(X), X)
    return {
        "L2": E(lambda X: L(X) ** 2),
        "HS": E(lambda X: np.sum(eta.hess(X) ** 2, axis=(1, 2))),
        "grad2": E(lambda X: np.sum(eta.grad(X) ** 2, axis=1)),
        "var": E(lambda X: eta.value(X) ** 2) - E(eta.value) ** 2,
    }


def check_linearization(eta: EvenFunction, variant: str = "i", slack: float = 1e-8,
                        orders: tuple = (32, 48), order_tol: float = 1e-8) -> CheckReport:
    """Linearized entropy inequalities at the standard Gaussian for even eta.

    i:        1/2 E(L eta)^2 <= E |Hess eta|_HS^2,  L eta = lap eta - <grad eta, x>
    ii-left:  E|grad eta|^2 - 1/4 E(L eta)^2 <= Var eta
    ii-right: Var eta <= E|grad eta|^2 - 1/2 E(L eta)^2 + 1/2 E|Hess eta|^2
    poincare: E|grad eta|^2 - 1/2 E|Hess eta|^2 <= Var eta
    """
    if variant not in LINEARIZATION_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {LINEARIZATION_VARIANTS}")
    rng = np.random.default_rng(1)
    X = rng.standard_normal((64, eta.dim)) * 2
    if np.max(np.abs(eta.value(X) - eta.value(-X))) > 1e-12 * max(1.0, np.max(np.abs(eta.value(X)))):
        raise ValueError(f"{eta.name} is not even")
    lo, hi = (gaussian_moments(eta, o) for o in orders)
    disagree = max(abs(lo[k] - hi[k]) / max(1.0, abs(hi[k])) for k in hi)
    m = hi
    if variant == "i":
        big, small = m["HS"], 0.5 * m["L2"]
    elif variant == "ii-left":
        big, small = m["var"], m["grad2"] - 0.25 * m["L2"]
    elif variant == "ii-right":
        big, small = m["grad2"] - 0.5 * m["L2"] + 0.5 * m["HS"], m["var"]
    else:
        big, small = m["var"], m["grad2"] - 0.5 * m["HS"]
    rep = inequality("check_linearization", f"{eta.name} | variant={variant}", big, small, slack,
                     extra={"variant": variant, "moments": m, "order_disagreement": disagree})
    if disagree > order_tol:
        rep.passed = False
        rep.diagnostics = f"Gauss-Hermite orders {orders} disagree by {disagree:.2e}"
    return rep


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckInfo:
    check_id: str
    func: Callable
    subject_kind: str        # function | s-function | any-function | body | eta
    needs_generator: bool
    subjects: int = 1
    summary: str = ""


REGISTRY = {c.check_id: c for c in [
    CheckInfo("check_duality", check_duality, "any-function", True, 1, "D_f(dual) = D_{f*}(primal)"),
    CheckInfo("check_as_duality", check_as_duality, "function", False, 1, "as_lam(phi) = as_{1-lam}(phi°)"),
    CheckInfo("check_s_identity", check_s_identity, "s-function", False, 1, "f = 1 case of s-duality"),
    CheckInfo("check_jensen_bound", check_jensen_bound, "any-function", True, 1, "D_f >= Jensen bound"),
    CheckInfo("check_gaussian_closed_form", check_gaussian_closed_form, "function", True, 1,
              "D_f of a Gaussian in closed form"),
    CheckInfo("check_kl_bound", check_kl_bound, "function", False, 1, "relative entropy upper bound"),
    CheckInfo("check_entropy_identity", check_entropy_identity, "function", False, 1,
              "log-ratio functional through Ent"),
    CheckInfo("check_monotonicity", check_monotonicity, "function", False, 1, "Hoelder interpolation of as_lam"),
    CheckInfo("check_ladder", check_ladder, "function", False, 1, "(as_lam/int phi)^{1/lam} nondecreasing"),
    CheckInfo("check_omega", check_omega, "function", False, 1, "finite-lambda ladder approaches Omega"),
    CheckInfo("check_omega_product", check_omega_product, "function", False, 1, "Omega_phi Omega_phi° <= 1"),
    CheckInfo("check_invariance", check_invariance, "function", True, 1, "invariance under symmetric SL(n)"),
    CheckInfo("check_valuation", check_valuation, "function", True, 2, "valuation on nested pairs"),
    CheckInfo("check_s_limit", check_s_limit, "function", True, 1, "s -> 0 limit of D_f^(s)"),
    CheckInfo("check_body_duality", check_body_duality, "body", True, 1, "D_f(K°) = D_{f*}(K)"),
    CheckInfo("check_body_jensen", check_body_jensen, "body", True, 1, "D_f(K) >= n|K| f(|K°|/|K|)"),
    CheckInfo("check_body_bridge", check_body_bridge, "body", True, 1, "body to function bridge"),
    CheckInfo("check_curvature", check_curvature, "body", False, 1, "curvature against an oracle"),
    CheckInfo("check_lift", check_lift, "s-function", True, 1, "lift of a 1-concave function"),
    CheckInfo("check_linearization", check_linearization, "eta", False, 1, "linearized inequalities"),
]}


def _load_anchors() -> dict:
    from importlib import resources
    import yaml
    text = resources.files("funcdiv").joinpath("data/anchors.yaml").read_text(encoding="utf-8")
    return yaml.safe_load(text)


def anchors() -> dict:
    """check id -> {"anchor": ..., "formula": ...} from the packaged anchor table."""
    return _load_anchors()


def list_checks() -> list[str]:
    table = anchors()
    lines = []
    for cid in REGISTRY:
        a = table.get(cid, {})
        lines.append(f"{cid} → {a.get('anchor', 'artifact')}: {a.get('formula', REGISTRY[cid].summary)}")
    return lines
