"""Scenario runner.

    funcdiv run <config.yaml | default> [--quad-tol T] [--out PATH] [--jobs K]
    funcdiv list-checks

Exit codes: 0 all mandatory checks pass, 2 some mandatory check failed,
1 configuration or runtime error.  Reports are JSON lines; the last line is a
summary record.
"""
from __future__ import annotations

import argparse
import inspect
import itertools
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Optional

import numpy as np
import yaml

from . import bodygeom as bg
from . import divergence as dv
from . import funcmodel as fm
from . import generators as gen
from . import verifier as V

SCHEMA_VERSION = 1
log = logging.getLogger("funcdiv")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# subject factories
# ---------------------------------------------------------------------------

def _matrix(v, dim=None):
    if v is None:
        return None
    a = np.asarray(v, float)
    if a.ndim == 0:
        return np.eye(dim or 1) * float(a)
    if a.ndim == 1:
        return np.diag(a)
    return a


def _function(spec: dict):
    fam = spec.get("family")
    dim = int(spec.get("dim", 1))
    if fam == "gaussian":
        A = _matrix(spec.get("A", 1.0), dim)
        return fm.gaussian(A, float(spec.get("C", 1.0)))
    if fam == "standard_gaussian":
        return fm.standard_gaussian(dim)
    if fam == "cosh":
        return fm.cosh_potential(dim)
    if fam == "quartic":
        return fm.quartic_potential(float(spec.get("a", 1.0)), dim)
    if fam == "radial_polynomial":
        return fm.radial_polynomial([float(c) for c in spec["coeffs"]], dim)
    raise ConfigError(f"unknown function family {fam!r}")


def _apply_ops(phi, spec):
    c = spec.get("scale_value")
    if c is not None:
        phi = phi.scaled_value(float(c))
    T = spec.get("compose")
    if T is not None:
        phi = phi.compose(_matrix(T, phi.dim))
    x0 = spec.get("translate")
    if x0 is not None:
        phi = phi.translate(np.asarray(x0, float))
    return phi


def _s_function(spec: dict):
    fam = spec.get("family")
    if fam == "s_ball":
        return fm.s_ball(float(spec.get("s", 1.0)), int(spec.get("dim", 1)))
    if fam == "half_circle":
        return fm.half_circle()
    if fam == "s_approximation":
        return fm.s_approximation(_apply_ops(_function(spec["of"]), spec["of"]), float(spec["s"]))
    raise ConfigError(f"unknown s-concave family {fam!r}")


def _body(spec: dict):
    fam = spec.get("family")
    if fam == "ball":
        return bg.ball(float(spec.get("r", 1.0)), int(spec.get("dim", 2)))
    if fam == "ellipsoid":
        return bg.ellipsoid(*[float(a) for a in spec["axes"]])
    if fam == "lp_smooth":
        return bg.lp_smooth(float(spec.get("p", 8.0)), int(spec.get("dim", 2)), float(spec.get("eps", 0.05)))
    if fam == "perturbed_ball":
        return bg.perturbed_ball(float(spec.get("eps", 0.05)), int(spec.get("k", 3)))
    if fam == "polar":
        return bg.polar_body(_body(spec["of"]))
    if fam == "lift":
        return bg.lift_body(_s_function(spec["of"]))
    raise ConfigError(f"unknown body family {fam!r}")


def _eta(spec: dict, seed: int):
    fam = spec.get("family")
    if fam == "quadratic":
        return V.quadratic_eta(_matrix(spec["B"]))
    if fam == "random_even":
        return V.random_even_eta(seed + int(spec.get("seed", 0)), int(spec.get("dim", 1)))
    if fam == "cos_rational":
        return V.cos_rational_eta()
    if fam == "constant":
        return V.constant_eta(float(spec.get("c", 1.0)), int(spec.get("dim", 1)))
    if fam == "trig":
        return V.trig_eta(spec["amps"], spec["freqs"], spec.get("B"), float(spec.get("quartic", 0.0)))
    raise ConfigError(f"unknown eta family {fam!r}")


KINDS = {"function", "s-function", "body", "eta"}


def build_subject(spec: dict, seed: int = 0):
    kind = spec.get("kind", "function")
    if kind == "function":
        return _apply_ops(_function(spec), spec)
    if kind == "s-function":
        return _s_function(spec)
    if kind == "body":
        return _body(spec)
    if kind == "eta":
        return _eta(spec, seed)
    raise ConfigError(f"unknown subject kind {kind!r}; expected one of {sorted(KINDS)}")


def _kind_ok(required: str, kind: str) -> bool:
    if required == "any-function":
        return kind in ("function", "s-function")
    return required == kind


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------

@dataclass
class Job:
    index: int
    check_id: str
    subjects: tuple
    generator: Optional[Any]
    params: dict
    mandatory: bool
    label: str = ""


@dataclass
class Scenario:
    subjects: dict
    generators: dict
    jobs: list
    quad: dict = field(default_factory=dict)
    output: str = "report.jsonl"
    seed: int = 0
    name: str = ""


COMPUTE = {
    "df": lambda s, g, qt: dv.df(g, s, qt),
    "mass": lambda s, g, qt: dv.total_mass(s, qt),
    "kl": lambda s, g, qt: dv.kl_divergence(s, qt),
    "log_divergence": lambda s, g, qt: dv.log_divergence(s, qt),
    "entropy": lambda s, g, qt: dv.entropy(s, qt),
    "omega": lambda s, g, qt: dv.omega(s, tol=qt),
    "volume": lambda s, g, qt: bg.volume(s),
    "df_body": lambda s, g, qt: bg.df_body(g, s, qt),
}


def _as_list(v):
    if v is None:
        return [None]
    return list(v) if isinstance(v, (list, tuple)) else [v]


def parse_scenario(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a mapping")
    ver = doc.get("schema_version", SCHEMA_VERSION)
    if ver != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {ver!r}")
    seed = int(os.environ.get("FUNC_DIV_SEED", doc.get("seed", 0)))
    subjects = doc.get("subjects") or {}
    if not isinstance(subjects, dict):
        raise ConfigError("'subjects' must map names to subject specs")
    for name, spec in subjects.items():
        if not isinstance(spec, dict):
            raise ConfigError(f"subject {name!r}: spec must be a mapping")
        if spec.get("kind", "function") not in KINDS:
            raise ConfigError(f"subject {name!r}: unknown kind {spec.get('kind')!r}")
        try:
            build_subject(spec, seed)  # families and parameters fail here, not at run time
        except ConfigError as e:
            raise ConfigError(f"subject {name!r}: {e}") from None
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"subject {name!r}: invalid parameters ({e})") from None
    gens = {}
    for name, spec in (doc.get("generators") or {}).items():
        try:
            gens[name] = gen.parse(spec)
        except ValueError as e:
            raise ConfigError(f"generator {name!r}: {e}") from None

    def generator(ref):
        if ref is None:
            return None
        if isinstance(ref, str) and ref in gens:
            return gens[ref]
        try:
            return gen.parse(ref)
        except ValueError as e:
            raise ConfigError(f"generator {ref!r}: {e}") from None

    jobs = []
    entries = doc.get("checks") or []
    if not isinstance(entries, list):
        raise ConfigError("'checks' must be a list")
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ConfigError(f"checks[{i}] must be a mapping")
        params = dict(entry.get("params") or {})
        mandatory = bool(entry.get("mandatory", True))
        if "compute" in entry:
            what = entry["compute"]
            if what not in COMPUTE:
                raise ConfigError(f"checks[{i}]: unknown compute request {what!r}")
            for sname, gref in itertools.product(_as_list(entry.get("subject")), _as_list(entry.get("generator"))):
                if sname not in subjects:
                    raise ConfigError(f"checks[{i}]: unknown subject {sname!r}")
                jobs.append(Job(len(jobs), f"compute:{what}", (sname,), generator(gref), params, False,
                                entry.get("label", "")))
            continue
        cid = entry.get("check")
        if cid not in V.REGISTRY:
            raise ConfigError(f"checks[{i}]: unknown check id {cid!r}")
        info = V.REGISTRY[cid]
        if info.subjects == 2:
            groups = [tuple(p) for p in entry.get("pairs", [entry.get("pair")]) if p is not None]
            if not groups or any(len(p) != 2 for p in groups):
                raise ConfigError(f"checks[{i}]: {cid} needs 'pair: [a, b]' or 'pairs'")
        else:
            groups = [(s,) for s in _as_list(entry.get("subject"))]
        gl = _as_list(entry.get("generator"))
        if info.needs_generator and gl == [None]:
            raise ConfigError(f"checks[{i}]: {cid} needs a generator")
        if not info.needs_generator and gl != [None]:
            raise ConfigError(f"checks[{i}]: {cid} takes no generator")
        variants = params.pop("each", None)
        if variants is not None and (not isinstance(variants, list)
                                     or not all(isinstance(v, dict) for v in variants)):
            raise ConfigError(f"checks[{i}]: params.each must be a list of mappings")
        plist = [dict(params, **v) for v in variants] if variants else [params]
        sig = inspect.signature(info.func)
        for k in {k for p in plist for k in p}:
            if k not in sig.parameters:
                raise ConfigError(f"checks[{i}]: {cid} has no parameter {k!r}")
        for grp, gref, p in itertools.product(groups, gl, plist):
            for sname in grp:
                if sname not in subjects:
                    raise ConfigError(f"checks[{i}]: unknown subject {sname!r}")
                kind = subjects[sname].get("kind", "function")
                if not _kind_ok(info.subject_kind, kind):
                    raise ConfigError(f"checks[{i}]: {cid} expects a {info.subject_kind} subject, "
                                      f"{sname!r} is a {kind}")
            jobs.append(Job(len(jobs), cid, grp, generator(gref), p, mandatory, entry.get("label", "")))
    quad = dict(doc.get("quad") or {})
    return Scenario(subjects, gens, jobs, quad, doc.get("output", "report.jsonl"), seed, doc.get("name", ""))


def load_scenario(path: str) -> Scenario:
    if path == "default":
        text = resources.files("funcdiv").joinpath("data/default_scenario.yaml").read_text(encoding="utf-8")
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"malformed config: {e}") from None
    return parse_scenario(doc)


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.floating, float)):
        return V._json_float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def run_job(sc: Scenario, job: Job, quad_tol: Optional[float]) -> dict:
    seed = sc.seed
    subs = [build_subject(sc.subjects[s], seed) for s in job.subjects]
    base = {"schema_version": SCHEMA_VERSION, "index": job.index, "label": job.label,
            "mandatory": job.mandatory}
    try:
        if job.check_id.startswith("compute:"):
            what = job.check_id.split(":", 1)[1]
            r = COMPUTE[what](subs[0], job.generator, quad_tol)
            rec = {"type": "compute", "check_id": job.check_id, "subject": job.subjects[0],
                   "value": V._json_float(float(r.value)), "pass": True,
                   "error_estimate": V._json_float(getattr(r, "error_estimate", 0.0)),
                   "converged": bool(getattr(r, "converged", True)),
                   "diagnostics": getattr(r, "diagnostics", "")}
            return {**base, **rec}
        info = V.REGISTRY[job.check_id]
        kw = dict(job.params)
        if "T" in kw:
            kw["T"] = _matrix(kw["T"])
        sig = inspect.signature(info.func)
        if "quad_tol" in sig.parameters and quad_tol is not None:
            kw.setdefault("quad_tol", quad_tol)
        if "seed" in sig.parameters:
            kw.setdefault("seed", seed)
        args = ([job.generator] if info.needs_generator else []) + subs
        rep = info.func(*args, **kw)
        return {**base, "type": "check", "error": False, **_plain(rep.to_record())}
    except Exception as e:  # a failing check must not abort the scenario
        log.exception("check %s failed with an exception", job.check_id)
        return {**base, "type": "check", "check_id": job.check_id, "subject": ", ".join(job.subjects),
                "lhs": "nan", "rhs": "nan", "margin": "nan", "tolerance": 0.0, "pass": False,
                "error": True, "diagnostics": f"{type(e).__name__}: {e}"}


def run_scenario(sc: Scenario, quad_tol: Optional[float] = None, jobs: int = 1,
                 progress: Optional[Callable[[dict], None]] = None) -> tuple[list, dict]:
    qt = quad_tol if quad_tol is not None else sc.quad.get("tol")
    t0 = time.perf_counter()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            records = list(ex.map(lambda j: run_job(sc, j, qt), sc.jobs))
        if progress:
            for r in records:
                progress(r)
    else:
        records = []
        for j in sc.jobs:
            r = run_job(sc, j, qt)
            records.append(r)
            if progress:
                progress(r)
    checks = [r for r in records if r["type"] == "check"]
    mand = [r for r in checks if r["mandatory"]]
    errors = sum(1 for r in mand if r.get("error"))
    failed = sum(1 for r in mand if not r["pass"] and not r.get("error"))
    code = 1 if errors else (2 if failed else 0)
    summary = {"schema_version": SCHEMA_VERSION, "type": "summary", "scenario": sc.name,
               "checks": len(checks), "passed": sum(1 for r in checks if r["pass"]),
               "failed_mandatory": failed, "errors": errors,
               "failed_optional": sum(1 for r in checks if not r["mandatory"] and not r["pass"]),
               "elapsed_s": round(time.perf_counter() - t0, 3), "exit_code": code}
    return records, summary


def write_report(path: str, records: list, summary: dict) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")
        fh.write(json.dumps(summary, ensure_ascii=False) + "\n")


def read_report(path: str) -> tuple[list, dict]:
    with open(path, encoding="utf-8") as fh:
        rows = [json.loads(line) for line in fh if line.strip()]
    for r in rows:
        if r.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unexpected schema_version in report: {r.get('schema_version')!r}")
    return rows[:-1], rows[-1]


def _line(r: dict) -> str:
    tag = "PASS" if r["pass"] else ("ERROR" if r.get("error") else "FAIL")
    if not r.get("mandatory", True) and not r["pass"]:
        tag += " (optional)"
    if r["type"] == "compute":
        return f"[{r['index']:3d}] {r['check_id']:28s} {r['subject']}: value={r['value']}"
    return (f"[{r['index']:3d}] {tag:16s} {r['check_id']:28s} {r['subject']}  "
            f"lhs={r['lhs']} rhs={r['rhs']} margin={r['margin']} tol={r['tolerance']}")


def main(argv: Optional[list] = None) -> int:
    ap = argparse.ArgumentParser(prog="funcdiv", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a scenario file ('default' for the shipped suite)")
    r.add_argument("config")
    r.add_argument("--quad-tol", type=float, default=None, help="override quad.tol")
    r.add_argument("--out", default=None, help="report path (JSON lines)")
    r.add_argument("--jobs", type=int, default=1, help="run checks on K threads")
    r.add_argument("-q", "--quiet", action="store_true")
    sub.add_parser("list-checks", help="list every check id with its reference")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.cmd == "list-checks":
        for line in V.list_checks():
            print(line)
        return 0
    try:
        sc = load_scenario(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    if args.jobs < 1:
        print("config error: --jobs must be >= 1", file=sys.stderr)
        return 1
    out = args.out or sc.output
    show = None if args.quiet else (lambda rec: print(_line(rec), flush=True))
    records, summary = run_scenario(sc, args.quad_tol, args.jobs, show)
    write_report(out, records, summary)
    print(f"summary: {summary['passed']}/{summary['checks']} passed, "
          f"{summary['failed_mandatory']} mandatory failures, {summary['errors']} errors, "
          f"{summary['elapsed_s']} s -> {out} (exit {summary['exit_code']})")
    return summary["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
