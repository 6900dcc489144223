"""Generators f of f-divergences: the power family, t ln t, -ln t, ln t and
user supplied functions, with the *-adjoint f*(t) = t f(1/t)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

INF = math.inf

CONVEX, CONCAVE, LINEAR = "convex", "concave", "linear"
FAMILIES = ("power", "tlogt", "neglog", "log", "custom")

_SHAPE_GRID = np.logspace(-6, 6, 200)


def ext_mul(a, b):
    """Extended-real product with the convention 0 * inf = 0."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    with np.errstate(invalid="ignore"):
        out = a * b
    zero = (a == 0) | (b == 0)
    return np.where(zero, 0.0, out)


def sampled_shape(func: Callable[[np.ndarray], np.ndarray], tol: float = 1e-8) -> Optional[str]:
    """Classify ``func`` as convex, concave or linear from interpolation gaps on
    a log-spaced grid in (1e-6, 1e6).  Returns None if it is neither.

    For consecutive nodes a < b < c the gap between f(b) and the chord through
    (a, f(a)), (c, f(c)) is the second-difference test for nonuniform grids.
    """
    t = _SHAPE_GRID
    with np.errstate(all="ignore"):
        y = np.asarray(func(t), float)
    if not np.all(np.isfinite(y)):
        raise ValueError("generator must be finite on (0, inf)")
    scale = max(float(np.max(np.abs(y))), 1e-300)
    a, b, c = t[:-2], t[1:-1], t[2:]
    lam = (b - a) / (c - a)
    chord = (1 - lam) * y[:-2] + lam * y[2:]
    gap = (chord - y[1:-1]) / scale
    lo, hi = float(gap.min()), float(gap.max())
    if lo >= -tol and hi <= tol:
        return LINEAR
    if lo >= -tol:
        return CONVEX
    if hi <= tol:
        return CONCAVE
    return None


def extrapolate_at_zero(func: Callable[[np.ndarray], np.ndarray]) -> float:
    """Numerical limit of func(t) as t -> 0+.

    Samples t = 10^-k for k = 6..14.  If successive differences shrink
    geometrically the tail is summed; otherwise the sequence is declared
    divergent and the sign of the trend decides +inf or -inf.
    """
    t = 10.0 ** -np.arange(6, 15)
    with np.errstate(all="ignore"):
        y = np.asarray(func(t), float)
    if np.any(np.isinf(y)):
        return float(np.sign(y[np.isinf(y)][0]) * INF)
    d = np.diff(y)
    if np.all(np.abs(d) <= 1e-13 * max(1.0, float(np.max(np.abs(y))))):
        return float(y[-1])
    nz = np.abs(d[:-1]) > 0
    ratio = np.abs(d[1:][nz] / d[:-1][nz]) if np.any(nz) else np.array([0.0])
    if np.all(ratio < 0.99):
        r = float(np.max(ratio[-3:]))
        return float(y[-1] + d[-1] * r / (1 - r))
    return INF if d[-1] > 0 else -INF


@dataclass(frozen=True)
class Generator:
    """A convex or concave f on (0, inf) with its limits at 0+.

    ``perspective(log_t, log_q)`` returns q f(t) computed from logarithms so
    that divergence integrands never form huge density ratios explicitly.
    """

    func: Callable[[np.ndarray], np.ndarray]
    shape: str
    f_at_zero: float
    fstar_at_zero: float
    family: str
    params: dict = field(default_factory=dict)
    name: str = ""
    _persp: Optional[Callable] = field(default=None, repr=False, compare=False)
    _adjoint: Optional[Callable[[], "Generator"]] = field(default=None, repr=False, compare=False)

    def __call__(self, t):
        t = np.asarray(t, float)
        with np.errstate(all="ignore"):
            return self.func(t)

    eval = __call__

    @property
    def is_convex(self) -> bool:
        return self.shape in (CONVEX, LINEAR)

    @property
    def is_concave(self) -> bool:
        return self.shape in (CONCAVE, LINEAR)

    def perspective(self, log_t, log_q):
        log_t = np.asarray(log_t, float)
        log_q = np.asarray(log_q, float)
        with np.errstate(all="ignore"):
            if self._persp is not None:
                return self._persp(log_t, log_q)
            return ext_mul(np.exp(log_q), self.func(np.exp(log_t)))

    def adjoint(self) -> "Generator":
        if self._adjoint is not None:
            return self._adjoint()
        f = self.func
        p = self.perspective
        return Generator(
            func=lambda t: t * f(1.0 / t),
            shape=self.shape,
            f_at_zero=self.fstar_at_zero,
            fstar_at_zero=self.f_at_zero,
            family="custom",
            params={"adjoint_of": self.name},
            name=f"({self.name})*",
            # q f*(p/q) = p f(q/p)
            _persp=lambda lt, lq: p(-lt, lq + lt),
            _adjoint=lambda: self,
        )

    def describe(self) -> dict:
        return {"family": self.family, "name": self.name, "shape": self.shape, **self.params}


def power(lam: float) -> Generator:
    """f(t) = t^lam."""
    lam = float(lam)
    if lam in (0.0, 1.0):
        shape = LINEAR
    elif 0.0 < lam < 1.0:
        shape = CONCAVE
    else:
        shape = CONVEX
    f0 = 0.0 if lam > 0 else (1.0 if lam == 0 else INF)
    fs0 = 0.0 if lam < 1 else (1.0 if lam == 1 else INF)

    def persp(lt, lq):
        if lam == 0.0:
            return np.exp(lq)
        return np.exp(lq + lam * lt)

    return Generator(lambda t: t ** lam, shape, f0, fs0, "power", {"lambda": lam},
                     f"t^{lam:g}", persp, lambda: power(1.0 - lam))


def tlogt() -> Generator:
    """f(t) = t ln t (relative entropy)."""
    return Generator(
        lambda t: ext_mul(t, np.log(t)), CONVEX, 0.0, INF, "tlogt", {}, "t ln t",
        lambda lt, lq: ext_mul(np.exp(lq + lt), lt), neglog)


def neglog() -> Generator:
    """f(t) = -ln t."""
    return Generator(
        lambda t: -np.log(t), CONVEX, INF, 0.0, "neglog", {}, "-ln t",
        lambda lt, lq: ext_mul(-np.exp(lq), lt), tlogt)


def log() -> Generator:
    """f(t) = ln t (concave); the generator behind the log-ratio functional."""
    return Generator(
        lambda t: np.log(t), CONCAVE, -INF, 0.0, "log", {}, "ln t",
        lambda lt, lq: ext_mul(np.exp(lq), lt), _neg_tlogt)


def _neg_tlogt() -> Generator:
    return Generator(
        lambda t: -ext_mul(t, np.log(t)), CONCAVE, 0.0, -INF, "custom",
        {"adjoint_of": "ln t"}, "-t ln t",
        lambda lt, lq: -ext_mul(np.exp(lq + lt), lt), log)


def custom(func: Callable[[np.ndarray], np.ndarray], name: str = "custom") -> Generator:
    """Wrap a user function, detecting its shape and limits numerically."""
    shape = sampled_shape(func)
    if shape is None:
        raise ValueError(f"generator {name!r} is neither convex nor concave on (1e-6, 1e6)")
    f0 = extrapolate_at_zero(func)
    fs0 = extrapolate_at_zero(lambda t: t * func(1.0 / t))
    return Generator(func, shape, f0, fs0, "custom", {}, name)


def builtin(family: str, params: Optional[dict] = None) -> Generator:
    params = dict(params or {})
    if family == "power":
        if "lambda" not in params:
            raise ValueError("power generator needs 'lambda'")
        return power(float(params["lambda"]))
    if family == "tlogt":
        return tlogt()
    if family == "neglog":
        return neglog()
    if family == "log":
        return log()
    if family == "custom":
        expr = params.get("expr")
        if not expr:
            raise ValueError("custom generator needs 'expr' (a numpy expression in t)")
        code = compile(expr, "<generator>", "eval")
        env = {"np": np, "__builtins__": {}}
        return custom(lambda t: eval(code, env, {"t": t}), name=expr)
    raise ValueError(f"unknown generator family {family!r}; expected one of {FAMILIES}")


def adjoint(g: Generator) -> Generator:
    return g.adjoint()


def parse(spec) -> Generator:
    """Build a generator from a config entry: 'tlogt', {'family': 'power', 'lambda': 2}, ..."""
    if isinstance(spec, Generator):
        return spec
    if isinstance(spec, str):
        if spec in ("id", "identity"):
            return power(1.0)
        if spec in ("one", "const"):
            return power(0.0)
        return builtin(spec)
    if isinstance(spec, dict):
        d = dict(spec)
        fam = d.pop("family", None)
        if fam is None:
            raise ValueError(f"generator spec without family: {spec!r}")
        return builtin(fam, d)
    raise ValueError(f"cannot build a generator from {spec!r}")
