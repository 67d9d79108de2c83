"""Command-line driver: config parsing, task dispatch and verification reports.

Configs are flat ``key = value`` text with dotted sections (``metric.kind``)
or the equivalent nested JSON object.  ``finslerlab --help`` lists the flags;
README.md documents every key.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import curvature as C
from . import measure as ME
from . import metrics as M
from . import norms as N
from . import quotients as Q
from .errors import BoundViolation, DivergenceError, FinslerError, InputError

TASKS = ("curvature-scan", "comparison-check", "quotient-sweep", "reversible-contrast",
         "distance-audit", "divergence-demo")
METRIC_KINDS = ("funk-ball", "funk", "hilbert", "klein", "interpolated", "minkowski")
NORM_KINDS = ("euclidean", "ellipsoid", "quartic", "powersum")
FORMATS = ("text", "json", "csv")
THREADS_ENV = "FINSLERLAB_THREADS"


class ConfigError(InputError):
    """Every violation found in a config, one message each."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid config:\n  " + "\n  ".join(self.violations))


class ExperimentError(FinslerError):
    """A module error, tagged with the config section that set it off."""

    def __init__(self, section, err):
        self.section = section
        self.cause = err
        super().__init__(f"[{section}] {type(err).__name__}: {err}")


# ---------------------------------------------------------------- config


def _floats(v):
    if isinstance(v, (int, float)):
        return [float(v)]
    return [float(x) for x in v]


# key -> (converter, default); a default of ... marks a required key
SCHEMA = {
    "task": (str, ...),
    "dim": (int, ...),
    "metric.kind": (str, ...),
    "metric.norm": (str, "euclidean"),
    "metric.axes": (_floats, None),
    "metric.m": (int, 2),
    "metric.split": (int, None),
    "metric.a": (float, 0.5),
    "metric.allow_flat_boundary": (bool, False),
    "measure.kind": (str, None),
    "measure.c": (float, 1.0),
    "quotient.kind": (str, None),
    "quotient.p": (float, None),
    "quotient.q": (float, None),
    "quotient.alphas": (_floats, list(Q.DEFAULT_ALPHAS)),
    "quotient.cutoff": (float, None),
    "quotient.mc_samples": (int, 0),
    "sampling.seed": (int, 0),
    "sampling.flags": (int, 20),
    "sampling.pairs": (int, 100),
    "curvature.N": (_floats, None),
    "comparison.rmin": (float, 0.01),
    "comparison.rmax": (float, 10.0),
    "comparison.points": (int, 200),
    "tolerance.scale": (float, 1.0),
    "output.dir": (str, None),
    "output.format": (str, "text"),
}

ALIASES = {
    "metric": "metric.kind", "measure": "measure.kind", "kind": "quotient.kind",
    "p": "quotient.p", "q": "quotient.q", "alphas": "quotient.alphas", "seed": "sampling.seed",
    "a": "metric.a", "norm": "metric.norm", "axes": "metric.axes", "n": "dim",
}


@dataclass
class ExperimentConfig:
    """Validated experiment settings, keyed exactly as in :data:`SCHEMA`."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def task(self):
        return self.values["task"]

    @property
    def dim(self):
        return self.values["dim"]

    def with_overrides(self, **kv):
        raw = dict(self.values)
        raw.update({k: v for k, v in kv.items() if v is not None})
        return validate_config(raw)


def _scalar(text):
    t = text.strip()
    if t.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return json.loads(t)
    except ValueError:
        pass
    if "," in t:
        return [_scalar(x) for x in t.split(",") if x.strip()]
    return t.strip("\"'")


def _flatten(obj, prefix=""):
    out = {}
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _read_text(text):
    """Key-value lines; ``[section]`` headers prefix the keys that follow."""
    raw, section, errs = {}, "", []
    for ln, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip() + "."
            continue
        if "=" not in s:
            errs.append(f"line {ln}: expected 'key = value', got {s!r}")
            continue
        k, v = s.split("=", 1)
        raw[section + k.strip()] = _scalar(v)
    return raw, errs


def _convert(key, conv, v):
    if conv is bool:
        if isinstance(v, bool):
            return v
        if isinstance(v, str) and v.lower() in ("true", "false", "yes", "no"):
            return v.lower() in ("true", "yes")
        raise ValueError(f"expected a boolean, got {v!r}")
    if conv is int:
        if isinstance(v, bool) or float(v) != int(float(v)):
            raise ValueError(f"expected an integer, got {v!r}")
        return int(float(v))
    if conv is str and not isinstance(v, str):
        raise ValueError(f"expected a string, got {v!r}")
    return conv(v)


def validate_config(raw: dict) -> ExperimentConfig:
    """Canonicalise keys, convert types and check every constraint; collects all violations."""
    errs = []
    vals = {}
    for k, v in raw.items():
        key = ALIASES.get(k, k)
        if key not in SCHEMA:
            errs.append(f"unknown key {k!r}")
            continue
        if key in vals:
            errs.append(f"key {key!r} given twice")
            continue
        try:
            vals[key] = _convert(key, SCHEMA[key][0], v)
        except (TypeError, ValueError) as e:
            errs.append(f"{key}: {e}")
    for key, (_, default) in SCHEMA.items():
        if key not in vals:
            if default is ...:
                errs.append(f"missing required key {key!r}")
            else:
                vals[key] = list(default) if isinstance(default, list) else default
    if errs and any(e.startswith("missing") for e in errs):
        raise ConfigError(errs)
    errs += _domain_checks(vals)
    if errs:
        raise ConfigError(errs)
    return ExperimentConfig(vals)


def _domain_checks(v):
    errs = []
    task, n, mk = v.get("task"), v.get("dim"), v.get("metric.kind")
    if task not in TASKS:
        errs.append(f"task must be one of {', '.join(TASKS)} (got {task!r})")
    if mk not in METRIC_KINDS:
        errs.append(f"metric.kind must be one of {', '.join(METRIC_KINDS)} (got {mk!r})")
    if not isinstance(n, int) or n < 2:
        errs.append(f"dim must be an integer >= 2 (got {n!r})")
        return errs
    if v["metric.norm"] not in NORM_KINDS:
        errs.append(f"metric.norm must be one of {', '.join(NORM_KINDS)}")
    if not 0.0 <= v["metric.a"] <= 1.0:
        errs.append(f"metric.a must lie in [0, 1] (got {v['metric.a']})")
    if v["metric.norm"] == "ellipsoid":
        ax = v["metric.axes"]
        if ax is None or len(ax) != n or min(ax) <= 0:
            errs.append(f"metric.axes needs {n} positive semi-axes for an ellipsoid")
    if v["metric.norm"] == "quartic":
        sp = v["metric.split"]
        if sp is None or not 1 <= sp < n:
            errs.append(f"metric.split must satisfy 1 <= split < dim for the quartic norm")
    if v["metric.norm"] == "powersum":
        if v["metric.m"] < 1:
            errs.append("metric.m must be a positive integer")
        elif (mk in ("funk", "hilbert") and v["metric.m"] > 1 and not v["metric.allow_flat_boundary"]):
            errs.append("power-sum domains have flat boundary points and are excluded as Funk domains; "
                        "set metric.allow_flat_boundary = true to override")
    mkind = v["measure.kind"]
    if mkind is not None and mkind not in ME.MEASURE_KINDS:
        errs.append(f"measure.kind must be one of {', '.join(ME.MEASURE_KINDS)}")
    if mkind == "constant" and not v["measure.c"] > 0:
        errs.append("measure.c must be positive")
    if not v["tolerance.scale"] > 0:
        errs.append("tolerance.scale must be positive")
    if v["output.format"] not in FORMATS:
        errs.append(f"output.format must be one of {', '.join(FORMATS)}")
    for key in ("sampling.flags", "sampling.pairs", "comparison.points"):
        if v[key] < 1:
            errs.append(f"{key} must be >= 1")
    if v["quotient.mc_samples"] < 0:
        errs.append("quotient.mc_samples must be >= 0")
    al = v["quotient.alphas"]
    if not al or min(al) <= 0 or any(b >= a for a, b in zip(al, al[1:])):
        errs.append("quotient.alphas must be positive and strictly decreasing")
    if v["curvature.N"] is not None and any(Nv <= n for Nv in v["curvature.N"]):
        errs.append(f"curvature.N entries must exceed dim = {n}")
    if not 0 < v["comparison.rmin"] < v["comparison.rmax"]:
        errs.append("comparison needs 0 < rmin < rmax")

    funk_like = mk in ("funk-ball", "funk") or (mk == "interpolated" and v["metric.a"] == 1.0)
    if task == "quotient-sweep":
        kind, p, q = v["quotient.kind"], v["quotient.p"], v["quotient.q"]
        if kind is None:
            errs.append("quotient-sweep needs quotient.kind")
        elif kind == "hardy" and p is not None and p >= n:
            errs.append(f"Hardy requires 1 < p < n (got p = {p:g}, n = {n}); for p >= n the Hardy weight "
                        "r^(-p) is not locally integrable and the inequality fails outright; "
                        "run task = divergence-demo instead")
        else:
            errs += Q.validate_params(kind, n, p, q if kind == "ckn" else None)
    if task == "divergence-demo":
        p = v["quotient.p"]
        if p is None or not p > 1:
            errs.append("divergence-demo needs quotient.p > 1")
        if not funk_like:
            errs.append("divergence-demo runs on Funk-type metrics (funk-ball, funk)")
    if task == "comparison-check" and not funk_like:
        errs.append("comparison-check runs on Funk-type metrics (funk-ball, funk)")
    if task == "distance-audit" and not funk_like:
        errs.append("distance-audit runs on Funk-type metrics (funk-ball, funk)")
    if task == "reversible-contrast":
        if mk not in ("klein", "hilbert", "minkowski") and not (mk == "interpolated" and v["metric.a"] == 0):
            errs.append("reversible-contrast needs a reversible metric (klein, hilbert, minkowski)")
        p = v["quotient.p"] if v["quotient.p"] is not None else 2.0
        if not 1 < p < n:
            errs.append(f"Hardy requires 1 < p < n (got p = {p:g}, n = {n})")
    return errs


def parse_config(source) -> ExperimentConfig:
    """Read a config from a path or from inline text (key-value or JSON)."""
    text = None
    if isinstance(source, dict):
        return validate_config(_flatten(source))
    if isinstance(source, Path) or ("\n" not in str(source) and "=" not in str(source)
                                    and not str(source).lstrip().startswith("{")):
        p = Path(source)
        if not p.is_file():
            raise InputError(f"config file not found: {p}")
        text = p.read_text(encoding="utf-8")
    else:
        text = str(source)
    if text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError([f"JSON config: {e}"]) from None
        if not isinstance(obj, dict):
            raise ConfigError(["JSON config must be an object"])
        return validate_config(_flatten(obj))
    raw, errs = _read_text(text)
    if errs:
        try:
            validate_config(raw)
        except ConfigError as e:
            errs += e.violations
        raise ConfigError(errs)
    return validate_config(raw)


# ---------------------------------------------------------------- builders


def build_norm(cfg: ExperimentConfig):
    n, kind = cfg.dim, cfg["metric.norm"]
    if kind == "euclidean":
        return N.Euclidean(n)
    if kind == "ellipsoid":
        return N.Ellipsoid(tuple(cfg["metric.axes"]))
    if kind == "quartic":
        return N.QuarticSplit(cfg["metric.split"], n - cfg["metric.split"])
    return N.PowerSum(n, cfg["metric.m"])


def build_metric(cfg: ExperimentConfig):
    mk, n = cfg["metric.kind"], cfg.dim
    flat = cfg["metric.allow_flat_boundary"]
    if mk == "funk-ball":
        return M.ExplicitBallFunk(n)
    if mk == "funk":
        return M.Funk(build_norm(cfg), flat)
    if mk == "hilbert":
        base = M.ExplicitBallFunk(n) if cfg["metric.norm"] == "euclidean" else M.Funk(build_norm(cfg), flat)
        return M.Hilbert(base)
    if mk == "klein":
        return M.KleinRiemannian(n)
    if mk == "interpolated":
        return M.InterpolatedFunk(cfg["metric.a"], n)
    return M.Minkowski(build_norm(cfg))


def build_measure(cfg: ExperimentConfig, spec):
    k = cfg["measure.kind"]
    if k is None:
        k = "riemannian" if cfg["metric.kind"] == "klein" else "bh"
    if k == "constant":
        return ME.ConstantDensity(cfg["measure.c"])
    return ME.MeasureSpec(k)


# ---------------------------------------------------------------- report


STATUSES = ("pass", "warn", "fail")


@dataclass
class Check:
    name: str
    expected: float | str
    observed: float | str
    tol: float | str
    status: str
    anchor: str = ""


def _judge(observed, expected, tol, *, rel=False, lower=False):
    if not np.isfinite(observed):
        return "fail"
    if lower:
        return "pass" if observed >= expected - tol else "fail"
    scale = abs(expected) if rel else 1.0
    return "pass" if abs(observed - expected) <= tol * scale else "fail"


@dataclass
class VerificationReport:
    title: str
    checks: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)

    def add(self, name, expected, observed, tol, status, anchor=""):
        self.checks.append(Check(name, expected, observed, tol, status, anchor))

    def counts(self):
        c = {s: 0 for s in STATUSES}
        for ch in self.checks:
            c[ch.status] += 1
        return c

    @property
    def ok(self):
        return self.counts()["fail"] == 0

    def summary(self):
        c = self.counts()
        return f"{len(self.checks)} checks: {c['pass']} pass, {c['warn']} warn, {c['fail']} fail"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "expected", "observed", "tol", "status"])
        for ch in self.checks:
            w.writerow([ch.name, _fmt(ch.expected), _fmt(ch.observed), _fmt(ch.tol), ch.status])
        return buf.getvalue()

    def to_dict(self):
        return {
            "title": self.title,
            "summary": dict(self.counts(), checks=len(self.checks)),
            "checks": [{"name": c.name, "expected": _json_num(c.expected), "observed": _json_num(c.observed),
                        "tol": _json_num(c.tol), "status": c.status, "anchor": c.anchor}
                       for c in self.checks],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self):
        lines = [self.title]
        if self.checks:
            w = max(len(c.name) for c in self.checks)
            for c in self.checks:
                lines.append(f"  [{c.status:4}] {c.name:<{w}}  observed={_fmt(c.observed)}  "
                             f"expected={_fmt(c.expected)}  tol={_fmt(c.tol)}  ({c.anchor})")
        lines.append(self.summary())
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _json_num(v):
    if isinstance(v, (float, np.floating, int, np.integer)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def emit_report(report: VerificationReport, fmt: str = "text", out=None) -> int:
    """Write the report to ``out`` (default stdout); returns the exit code."""
    if fmt not in FORMATS:
        raise InputError(f"format must be one of {', '.join(FORMATS)}")
    stream = out or sys.stdout
    stream.write({"text": report.to_text, "json": report.to_json, "csv": report.to_csv}[fmt]())
    return 0 if report.ok else 1


# ---------------------------------------------------------------- tasks


def _threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be an integer") from None


def _pmap(fn, items):
    items = list(items)
    if not items:
        return []
    first = fn(items[0])  # warms the compile caches before any fan-out
    t = _threads()
    if t == 1 or len(items) == 1:
        return [first] + [fn(it) for it in items[1:]]
    with ThreadPoolExecutor(max_workers=t) as ex:
        return [first] + list(ex.map(fn, items[1:]))


def sample_interior(spec, rng, count, shrink=0.8):
    """Points spread through shrink * Omega (or through the unit ball for Minkowski)."""
    n = spec.dim
    d = rng.standard_normal((count, n))
    t = rng.uniform(size=count) ** (1.0 / n)
    dn = spec.domain_norm
    scale = np.linalg.norm(d, axis=1) if dn is None else np.asarray(dn.value(d), float)
    return shrink * t[:, None] * d / scale[:, None]


def _flags(spec, rng, count):
    n = spec.dim
    X = sample_interior(spec, rng, count)
    Y = rng.standard_normal((count, n))
    V = rng.standard_normal((count, n))
    return list(zip(X, Y, V))


def _judge_range(observed, lo, hi, tol):
    """Open-interval check: inside passes, a marginal miss (within tol) warns."""
    if not np.isfinite(observed):
        return "fail"
    if lo < observed < hi:
        return "pass"
    return "warn" if lo - tol <= observed <= hi + tol else "fail"


def _interpolated_ranges(cfg, measure):
    """Open ranges for K, Ric and S of F_a, 0 < a < 1; S only for constant densities."""
    n, a = cfg.dim, cfg["metric.a"]
    if cfg["metric.kind"] != "interpolated" or not 0.0 < a < 1.0:
        return None
    K = (-1.0 / (1 - a) ** 2, -1.0 / (1 + a) ** 2)
    S = (0.0, (n + 1) * a / (2 * (1 - a * a))) if measure.kind in ("bh", "lebesgue", "constant") else None
    return K, ((n - 1) * K[0], (n - 1) * K[1]), S


def _curvature_expectations(cfg, spec, measure):
    """Reference values by metric family; None where no exact constant is known."""
    n, mk = cfg.dim, cfg["metric.kind"]
    constant_density = measure.kind in ("lebesgue", "constant", "bh", "funk-bh")
    if spec.funk_type:
        S = (n + 1) / 2 if constant_density else None
        return -0.25, -(n - 1) / 4, S, "Funk metric: K = -1/4, S = (n+1)/2 with BH measure", 1e-4
    if mk == "minkowski" and measure.kind in ("lebesgue", "constant", "bh"):
        return 0.0, 0.0, 0.0, "Minkowski space: flat, S = 0", 1e-8
    if mk in ("klein", "hilbert"):
        ball = mk == "klein" or cfg["metric.norm"] == "euclidean"
        S = 0.0 if (ball and measure.kind in ("bh", "riemannian")) else None
        if measure.kind == "funk-bh":
            S = "projective"
        return -1.0, -(n - 1.0), S, "Hilbert metric: constant flag curvature -1", 1e-4
    if mk == "interpolated" and cfg["metric.a"] == 0.0:
        return -1.0, -(n - 1.0), 0.0, "Klein model: constant flag curvature -1", 1e-4
    return None, None, None, "no closed-form reference for this metric", 1e-4


def task_curvature_scan(cfg, spec, measure, rep):
    n = cfg.dim
    rng = np.random.default_rng(cfg["sampling.seed"])
    Ns = cfg["curvature.N"] or [n + 1.0, 2.0 * n, math.inf]
    K0, R0, S0, anchor, base_tol = _curvature_expectations(cfg, spec, measure)
    tol = base_tol * cfg["tolerance.scale"]
    ranges = _interpolated_ranges(cfg, measure)
    if ranges is not None:
        anchor = "interpolated metric: sharp open bounds, marginal misses warn"

    def one(flag):
        x, y, v = flag
        r = C.curvature_report(spec, measure, x, y, v, Ns=tuple(Ns))
        P = M.projective_factor(spec, r.x, r.y) if S0 == "projective" else None
        return r, P

    results = _pmap(one, _flags(spec, rng, cfg["sampling.flags"]))
    header = results[0][0].header(Ns)
    rows = [r.row() for r, _ in results]
    rep.artifacts["curvature.csv"] = _csv(header, rows)
    for i, (r, P) in enumerate(results):
        tag = f"flag[{i}]"
        if ranges is not None:
            for name, obs, rg in (("K", r.flag, ranges[0]), ("Ric", r.ricci, ranges[1]),
                                  ("S", r.s_curvature, ranges[2])):
                if rg is None:
                    rep.add(f"{tag} {name}", "n/a", obs, "n/a", "warn", anchor)
                else:
                    rep.add(f"{tag} {name}", f"({_fmt(rg[0])}, {_fmt(rg[1])})", obs, tol,
                            _judge_range(obs, rg[0], rg[1], tol), anchor)
            continue
        for name, obs, exp in (("K", r.flag, K0), ("Ric", r.ricci, R0)):
            if exp is None:
                rep.add(f"{tag} {name}", "n/a", obs, "n/a", "warn", anchor)
            else:
                rep.add(f"{tag} {name}", exp, obs, tol, _judge(obs, exp, tol), anchor)
        if S0 == "projective":
            Sx = (n + 1) * P
            rep.add(f"{tag} S", Sx, r.s_curvature, tol, _judge(r.s_curvature, Sx, tol),
                    "Hilbert metric with Funk BH measure: S = (n+1) P")
            for Nv in Ns:
                obs = r.weighted_ricci[Nv]
                ex = C.hilbert_weighted_ricci_closed(n, P, Nv)
                rep.add(f"{tag} Ric_N@{C._fmtN(Nv)}", ex, obs, tol, _judge(obs, ex, tol),
                        "Hilbert weighted Ricci closed form")
                lb = C.hilbert_weighted_ricci_bound(n, Nv)
                rep.add(f"{tag} Ric_N@{C._fmtN(Nv)} bound", lb, obs, tol, _judge(obs, lb, tol, lower=True),
                        "Hilbert weighted Ricci lower bound")
        elif S0 is None:
            rep.add(f"{tag} S", "n/a", r.s_curvature, "n/a", "warn", anchor)
        else:
            rep.add(f"{tag} S", S0, r.s_curvature, tol, _judge(r.s_curvature, S0, tol), anchor)
            if R0 is not None:
                for Nv in Ns:
                    ex = R0 if Nv == math.inf else R0 - S0 * S0 / (Nv - n)
                    obs = r.weighted_ricci[Nv]
                    rep.add(f"{tag} Ric_N@{C._fmtN(Nv)}", ex, obs, tol, _judge(obs, ex, tol),
                            "weighted Ricci with constant S")


def task_comparison_check(cfg, spec, measure, rep):
    n = cfg.dim
    prof = ME.funk_profile(n)
    grid = np.geomspace(cfg["comparison.rmin"], cfg["comparison.rmax"], cfg["comparison.points"])
    tol = 1e-8 * cfg["tolerance.scale"]
    anchor = "volume comparison: Funk polar profile attains the bound (k = 1/2, h = (n+1)/(2(n-1)))"
    try:
        res = ME.check_comparison(prof, lambda r: ME.polar_density_funk(n, r), grid, rtol=tol, equality=True)
    except BoundViolation as e:
        res = e.worst
    rep.artifacts["comparison.csv"] = res.to_csv()
    rep.add("comparison max |ratio - 1|", 0.0, res.equality_error, tol,
            _judge(res.equality_error, 0.0, tol), anchor)
    rep.add("comparison max ratio", 1.0, res.max_ratio, tol, _judge(res.max_ratio, 1.0, tol), anchor)


def task_quotient_sweep(cfg, spec, measure, rep):
    kind = cfg["quotient.kind"]
    p, q = cfg["quotient.p"], cfg["quotient.q"]
    if kind in ("hpw",):
        p = None
    params = {k: v for k, v in (("p", p), ("q", q if kind == "ckn" else None)) if v is not None}
    try:
        sw = Q.alpha_sweep(kind, spec, measure, cfg["quotient.alphas"], params, cutoff=cfg["quotient.cutoff"],
                           expect_decrease=False)
    except FinslerError as e:
        raise ExperimentError("quotient", e) from e
    rep.artifacts["sweep.csv"] = sw.to_csv()
    rep.artifacts["sweep.json"] = sw.to_json() + "\n"
    scale = cfg["tolerance.scale"]
    qs = sw.quotients
    for row in sw.rows:
        a = row.alpha
        if kind == "eigenvalue":
            ex = a ** p
            rep.add(f"{kind} alpha={a:g} quotient", ex, row.quotient, 1e-8 * scale,
                    _judge(row.quotient, ex, 1e-8 * scale, rel=True), "eikonal identity: Lambda_p = alpha^p")
        elif kind == "ckn":
            ex = a ** (2 * (2 - q)) * ((2 - q) / (p - 2)) ** 2
            obs = row.num1 / row.num2
            rep.add(f"ckn alpha={a:g} prefactor", ex, obs, 1e-8 * scale, _judge(obs, ex, 1e-8 * scale, rel=True),
                    "CKN gradient to weight ratio")
    if kind != "eigenvalue" and spec.funk_type:
        anchor = "failure of the sharp inequality on Funk spaces"
        rep.add(f"{kind} strictly decreasing", "true", str(sw.monotone).lower(), "n/a",
                "pass" if sw.monotone else "fail", anchor)
        rep.add(f"{kind} terminal / sharp", 0.01, float(qs[-1] / sw.sharp_const), "upper",
                "pass" if qs[-1] < 0.01 * sw.sharp_const else "fail", anchor)
    mc = cfg["quotient.mc_samples"]
    if mc:
        for row in sw.rows:
            tf = Q.make_testfn(kind, row.alpha, p, q, cfg["quotient.cutoff"])
            est = Q.montecarlo_quotient_integrals(kind, spec, measure, np.zeros(cfg.dim), tf, p=p,
                                                  q=q if kind == "ckn" else None, samples=mc,
                                                  seed=cfg["sampling.seed"])
            for name, (val, se) in est.items():
                ref = getattr(row, name)
                z = abs(val - ref) / se if se > 0 else math.inf
                rep.add(f"{kind} alpha={row.alpha:g} {name} MC z-score", 0.0, z, 3.0,
                        "pass" if z <= 3.0 else "fail", "radial vs Monte Carlo cross-validation")


def task_reversible_contrast(cfg, spec, measure, rep):
    p = cfg["quotient.p"] if cfg["quotient.p"] is not None else 2.0
    cutoff = cfg["quotient.cutoff"]
    if cutoff is None and cfg["metric.kind"] != "minkowski":
        cutoff = 8.0
    try:
        rows = Q.reversible_contrast(spec, measure, alphas=cfg["quotient.alphas"], p=p, cutoff=cutoff,
                                     rtol=1e-6 * cfg["tolerance.scale"])
    except BoundViolation as e:
        rows = None
        bad = e.worst
        rep.add(f"{bad.kind} alpha={bad.alpha:g} >= sharp", bad.sharp, bad.quotient, "lower", "fail",
                "sharp inequality on a reversible space with S = 0")
        return
    except FinslerError as e:
        raise ExperimentError("quotient", e) from e
    rep.artifacts["contrast.csv"] = _csv(["kind", "alpha", "quotient", "sharp_const"],
                                         [(r.kind, r.alpha, r.quotient, r.sharp) for r in rows])
    for r in rows:
        rep.add(f"{r.kind} alpha={r.alpha:g} >= sharp", r.sharp, r.quotient, 1e-6 * cfg["tolerance.scale"],
                "pass" if r.ok else "fail", "sharp inequality on a reversible space with S = 0")


def task_distance_audit(cfg, spec, measure, rep):
    n = cfg.dim
    rng = np.random.default_rng(cfg["sampling.seed"])
    tol = 1e-6 * cfg["tolerance.scale"]
    X1 = sample_interior(spec, rng, cfg["sampling.pairs"])
    X2 = sample_interior(spec, rng, cfg["sampling.pairs"])
    d_ray = np.asarray(M.funk_distance(spec, X1, X2), float)
    d_geo = np.array(_pmap(lambda ab: M.geodesic_arclength(spec, ab[0], ab[1], ab[2]),
                           zip(X1, X2, d_ray)))
    o = np.zeros(n)
    d0_ray = np.asarray(M.funk_distance(spec, np.broadcast_to(o, X2.shape), X2), float)
    d0_closed = np.asarray(M.distance_from_origin_closed(spec, X2), float)
    rows = [(i, a, b, c, d) for i, (a, b, c, d) in enumerate(zip(d_ray, d_geo, d0_ray, d0_closed))]
    rep.artifacts["distances.csv"] = _csv(["pair", "ray", "arclength", "ray_from_origin", "closed_from_origin"],
                                          rows)
    e1 = float(np.max(np.abs(d_ray - d_geo)))
    e2 = float(np.max(np.abs(d0_ray - d0_closed)))
    rep.add("max |ray - arclength|", 0.0, e1, tol, _judge(e1, 0.0, tol), "distance as geodesic length")
    rep.add("max |ray - closed form from origin|", 0.0, e2, tol, _judge(e2, 0.0, tol),
            "d(0, x) = -ln(1 - phi(x))")
    h = np.zeros(n)
    h[0] = 0.5
    if cfg["metric.kind"] == "funk-ball" or cfg["metric.norm"] == "euclidean":
        t9 = 1e-9 * cfg["tolerance.scale"]
        fwd = float(M.funk_distance(spec, o, h))
        bwd = float(M.funk_distance(spec, h, o))
        rep.add("d(0, e1/2)", math.log(2.0), fwd, t9, _judge(fwd, math.log(2.0), t9), "Funk ball: ln 2")
        rep.add("d(e1/2, 0)", math.log(1.5), bwd, t9, _judge(bwd, math.log(1.5), t9), "Funk ball: ln 3/2")


def task_divergence_demo(cfg, spec, measure, rep):
    n, p = cfg.dim, cfg["quotient.p"]
    anchor = "Hardy weight r^(-p) is locally integrable iff p < n"
    model = Q.radial_model_for(spec, measure)
    tf = Q.GaussianBubble(cfg["quotient.alphas"][0])
    num = model.angular * Q.radial_integral(lambda r: tf.du(r) ** p, n, model=model)
    rep.add("numerator finite", "finite", num, "n/a", "pass" if math.isfinite(num) else "fail", anchor)
    expect_div = p >= n
    try:
        den = model.angular * Q.radial_integral(lambda r: np.abs(tf.u(r)) ** p / r ** p, n, model=model)
        diverged = False
    except DivergenceError:
        den, diverged = math.inf, True
    rep.add("denominator divergent", str(expect_div).lower(), str(diverged).lower(), "n/a",
            "pass" if diverged == expect_div else "fail", anchor)
    probe = ME.local_finiteness_probe(spec, measure, np.zeros(n), p, 1.0)
    rep.add("local finiteness probe divergent", str(expect_div).lower(), str(probe.divergent).lower(), "n/a",
            "pass" if probe.divergent == expect_div else "fail", anchor)
    rep.artifacts["divergence.csv"] = _csv(["cutoff", "partial_integral"], list(zip(probe.cutoffs, probe.partial)))


TASK_FUNCS = {
    "curvature-scan": task_curvature_scan,
    "comparison-check": task_comparison_check,
    "quotient-sweep": task_quotient_sweep,
    "reversible-contrast": task_reversible_contrast,
    "distance-audit": task_distance_audit,
    "divergence-demo": task_divergence_demo,
}

_SECTION = {"curvature-scan": "curvature", "comparison-check": "comparison", "quotient-sweep": "quotient",
            "reversible-contrast": "quotient", "distance-audit": "sampling", "divergence-demo": "quotient"}


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> VerificationReport:
    """Dispatch the task, collect checks, and write artifacts to ``out_dir`` if given."""
    try:
        spec = build_metric(cfg)
        measure = build_measure(cfg, spec)
    except FinslerError as e:
        raise ExperimentError("metric", e) from e
    title = f"finslerlab {cfg.task}: metric={cfg['metric.kind']} dim={cfg.dim} measure={measure.kind}"
    rep = VerificationReport(title)
    try:
        TASK_FUNCS[cfg.task](cfg, spec, measure, rep)
    except ExperimentError:
        raise
    except FinslerError as e:
        raise ExperimentError(_SECTION[cfg.task], e) from e
    out_dir = out_dir or cfg["output.dir"]
    if out_dir:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        files = dict(rep.artifacts)
        files["report.csv"] = rep.to_csv()
        files["report.json"] = rep.to_json()
        for name, text in sorted(files.items()):
            with open(d / name, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    return rep


# ---------------------------------------------------------------- entry point


def build_parser():
    ap = argparse.ArgumentParser(prog="finslerlab", description="Finsler geometry verification experiments.")
    ap.add_argument("--config", metavar="PATH", help="config file (key-value or JSON)")
    ap.add_argument("--task", choices=TASKS, help="override the config's task")
    ap.add_argument("--out", metavar="DIR", help="directory for CSV/JSON artifacts")
    ap.add_argument("--seed", type=int, help="override sampling.seed")
    ap.add_argument("--format", choices=FORMATS, help="report format on stdout")
    ap.add_argument("--tolerance-scale", type=float, metavar="X", help="multiply every tolerance by X")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="extra config entry; repeatable")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = {}
        if args.config:
            p = Path(args.config)
            if not p.is_file():
                raise InputError(f"config file not found: {p}")
            text = p.read_text(encoding="utf-8")
            if text.lstrip().startswith("{"):
                raw = _flatten(json.loads(text))
            else:
                raw, errs = _read_text(text)
                if errs:
                    raise ConfigError(errs)
        for item in args.set:
            if "=" not in item:
                raise ConfigError([f"--set expects KEY=VALUE, got {item!r}"])
            k, v = item.split("=", 1)
            raw[k.strip()] = _scalar(v)
        over = {"task": args.task, "sampling.seed": args.seed, "output.format": args.format,
                "tolerance.scale": args.tolerance_scale, "output.dir": args.out}
        for k, v in over.items():
            if v is not None:
                raw = {kk: vv for kk, vv in raw.items() if ALIASES.get(kk, kk) != k}
                raw[k] = v
        cfg = validate_config(raw)
        rep = run_experiment(cfg)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return 2
    except (FinslerError, json.JSONDecodeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return emit_report(rep, cfg["output.format"])


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
