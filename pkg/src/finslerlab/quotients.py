"""Test functions, radial and Monte Carlo integration, and functional-inequality quotients.

Radial test functions u(r) of the distance r = d(o, x) satisfy F*(du) = |u'(r)|
by the eikonal equation, so every quotient reduces to one-dimensional
integrals once the measure is disintegrated along rays from o.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from ._jax import jax, jnp
from .errors import BoundViolation, DivergenceError, DomainError, InputError, NumericError
from .measure import (
    MeasureSpec,
    _cached_domain_volume,
    bh_density,
    interpolated_bh_density,
    log_density_fn,
)
from .metrics import (
    ExplicitBallFunk,
    FinslerMetricSpec,
    Hilbert,
    InterpolatedFunk,
    Minkowski,
    funk_distance,
    jitted,
)
from .norms import Euclidean, dual_norm
from .quadrature import DEFAULT_QUAD, QuadratureConfig, gauss_legendre, graded_integral, unit_ball_volume

KINDS = ("eigenvalue", "hardy", "hpw", "ckn")

# ---------------------------------------------------------------- test functions


@dataclass(frozen=True)
class TestFunction:
    """Radial profile u(r) and co-gradient length |u'(r)|.

    ``gaussian``: u = -exp(-alpha r).  ``ckn``: u = -(1 + (alpha r)^{2-q})^{1/(2-p)}.
    ``cutoff`` R > 0 shifts the Gaussian bubble to u = -exp(-alpha r) + exp(-alpha R)
    on r < R and zero beyond, a compactly supported variant for spaces of
    exponential volume growth.
    """

    __test__ = False  # not a pytest class

    kind: str
    alpha: float
    p: float | None = None
    q: float | None = None
    cutoff: float | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "ckn"):
            raise InputError(f"unknown test function {self.kind!r}")
        if not self.alpha > 0:
            raise InputError("alpha must be positive")
        if self.kind == "ckn":
            if self.p is None or self.q is None or not (0 < self.q < 2 < self.p):
                raise InputError("CKN bubble requires 0 < q < 2 < p")
        if self.cutoff is not None and self.kind != "gaussian":
            raise InputError("only Gaussian bubbles support a cutoff")

    def u(self, r):
        r = np.asarray(r, float)
        a = self.alpha
        if self.kind == "gaussian":
            v = -np.exp(-a * r)
            if self.cutoff is not None:
                v = np.where(r < self.cutoff, v + math.exp(-a * self.cutoff), 0.0)
            return v
        p, q = self.p, self.q
        return -(1.0 + (a * r) ** (2 - q)) ** (1.0 / (2 - p))

    def du(self, r):
        """|u'(r)| = F*(du) at distance r."""
        r = np.asarray(r, float)
        a = self.alpha
        if self.kind == "gaussian":
            v = a * np.exp(-a * r)
            if self.cutoff is not None:
                v = np.where(r < self.cutoff, v, 0.0)
            return v
        p, q = self.p, self.q
        return ((2 - q) / (p - 2)) * a ** (2 - q) * r ** (1 - q) \
            * (1.0 + (a * r) ** (2 - q)) ** ((p - 1) / (2 - p))


def GaussianBubble(alpha: float, cutoff: float | None = None) -> TestFunction:
    return TestFunction("gaussian", alpha, cutoff=cutoff)


def CKNBubble(alpha: float, p: float, q: float) -> TestFunction:
    return TestFunction("ckn", alpha, p, q)


# ---------------------------------------------------------------- radial models


@dataclass(frozen=True)
class RadialModel:
    """Disintegration dm = angular * weight(s) ds dtheta along rays from the base point.

    ``r(s)`` is the distance at radial parameter s in (0, 1) and ``angular`` the
    total angular mass, so that the full integral of g(r) dm equals
    angular * integral of g(r(s)) weight(s) ds.  ``r_c`` and ``weight_c`` give
    the same maps in the complement w = 1 - s, which keeps full precision next
    to the far end s = 1.
    """

    name: str
    n: int
    r: Callable = field(repr=False)
    weight: Callable = field(repr=False)
    angular: float = 1.0
    s_of_r: Callable | None = field(default=None, repr=False)
    r_c: Callable | None = field(default=None, repr=False)
    weight_c: Callable | None = field(default=None, repr=False)


def funk_radial_model(n: int, angular: float | None = None) -> RadialModel:
    """Funk domain about the origin with constant density: r = -ln(1 - s), weight s^{n-1}."""
    ang = n * unit_ball_volume(n) if angular is None else angular
    return RadialModel("funk", n, lambda s: -np.log1p(-s), lambda s: s ** (n - 1), ang,
                       lambda r: -np.expm1(-r), lambda w: -np.log(w), lambda w: (1 - w) ** (n - 1))


def minkowski_radial_model(n: int, angular: float | None = None) -> RadialModel:
    """Minkowski space with Lebesgue measure: r = s / (1 - s)."""
    ang = n * unit_ball_volume(n) if angular is None else angular
    return RadialModel("minkowski", n, lambda s: s / (1 - s),
                       lambda s: (s / (1 - s)) ** (n - 1) / (1 - s) ** 2, ang,
                       lambda r: r / (1 + r), lambda w: (1 - w) / w,
                       lambda w: ((1 - w) / w) ** (n - 1) / w ** 2)


class _RayDistance:
    """Distance from the origin along the e_1 ray, r(t) = integral_0^t F(s e_1, e_1) ds.

    Computed with the substitution s = 1 - e^{-w}, which turns the boundary
    blow-up F ~ 1/(1 - s) into a bounded integrand; 32-point Gauss-Legendre
    on unit chunks of w.
    """

    def __init__(self, spec):
        self.spec = spec
        self.e = np.eye(spec.dim)[0]
        self.x, self.w = gauss_legendre(32)

    def __call__(self, t):
        t = np.asarray(t, float)
        W = -np.log1p(-t)
        out = np.zeros_like(t)
        nchunk = int(np.ceil(np.max(W))) if W.size else 0
        for c in range(nchunk):
            lo = np.minimum(W, c)
            hi = np.minimum(W, c + 1.0)
            act = hi > lo
            if not act.any():
                continue
            half = 0.5 * (hi[act] - lo[act])
            wn = lo[act][:, None] + half[:, None] * (self.x + 1.0)
            s = -np.expm1(-wn)
            F = self.spec.value(s[..., None] * self.e, self.e).reshape(s.shape)
            out[act] += half * np.sum(F * np.exp(-wn) * self.w, axis=1)
        return out


def metric_radial_model(spec: FinslerMetricSpec, measure: MeasureSpec) -> RadialModel:
    """Numerical radial model for rotation-invariant metrics on the unit ball.

    The distance along rays is integrated from F itself and the density comes
    from the measure (for ``riemannian`` measures, from det g by automatic
    differentiation), so no closed hyperbolic formula is assumed.
    """
    n = spec.dim
    if not isinstance(spec.domain_norm, Euclidean):
        raise InputError("numerical radial models need a metric on the Euclidean unit ball")
    rd = _RayDistance(spec)
    e = np.eye(n)[0]

    def weight(t):
        t = np.asarray(t, float)
        sig = _density_batch(spec, measure, t.ravel()[:, None] * e)
        return sig.reshape(t.shape) * t ** (n - 1)

    def s_of_r(R):
        return optimize.brentq(lambda t: float(rd(np.array([t]))[0]) - R, 0.0, 1.0 - 1e-15,
                               xtol=1e-15, rtol=1e-15)

    return RadialModel(f"{spec.kind}-numeric", n, rd, weight, n * unit_ball_volume(n), s_of_r)


def radial_model_for(spec: FinslerMetricSpec, measure: MeasureSpec) -> RadialModel:
    """Pick the disintegration about the origin for ``spec`` and ``measure``."""
    n = spec.dim
    const_kinds = ("lebesgue", "constant", "bh", "funk-bh")
    if spec.funk_type and measure.kind in const_kinds:
        sigma = bh_density(spec, measure, np.zeros(n))
        return funk_radial_model(n, sigma * n * _cached_domain_volume(spec.domain_norm))
    if isinstance(spec, Minkowski) and measure.kind in const_kinds:
        sigma = bh_density(spec, measure, np.zeros(n))
        return minkowski_radial_model(n, sigma * n * _cached_domain_volume(spec.norm))
    if isinstance(spec, (InterpolatedFunk, Hilbert)) and isinstance(spec.domain_norm, Euclidean):
        return metric_radial_model(spec, measure)
    raise InputError(f"no radial model for metric kind {spec.kind!r} with measure {measure.kind!r}")


# ---------------------------------------------------------------- radial integration


def radial_integral(g, n: int, quad: QuadratureConfig = DEFAULT_QUAD, *, model: RadialModel | None = None,
                    s_min: float = 0.0, s_max: float = 1.0) -> float:
    """Integral over (s_min, s_max) of g(r(s)) weight(s) ds, without the angular factor.

    With the default Funk model this is the integral of g(-ln(1-s)) s^{n-1}.
    Adaptive Gauss-Legendre on a partition graded toward both ends; a
    non-integrable end-point singularity raises :class:`DivergenceError`.
    """
    m = model or funk_radial_model(n)

    def f(s):
        return g(m.r(s)) * m.weight(s)

    if s_max == 1.0 and m.r_c is not None and s_min < 0.5:
        # outer half in the complement variable w = 1 - s
        def fc(w):
            return g(m.r_c(w)) * m.weight_c(w)

        inner = graded_integral(f, s_min, 0.5, quad, right=False, tails=(s_min == 0.0, False))
        outer = graded_integral(fc, 0.0, 0.5, quad, right=False, tails=(True, False))
        return inner.value + outer.value
    res = graded_integral(f, s_min, s_max, quad, tails=(s_min == 0.0, s_max == 1.0))
    return res.value


def _integrands(kind, tf: TestFunction, p=None, q=None):
    """Named integrands of the quotient as functions of r."""
    u, du = tf.u, tf.du
    if kind == "eigenvalue":
        return {"num1": lambda r: du(r) ** p, "den": lambda r: np.abs(u(r)) ** p}
    if kind == "hardy":
        return {"num1": lambda r: du(r) ** p, "den": lambda r: np.abs(u(r)) ** p / r ** p}
    if kind == "hpw":
        return {"num1": lambda r: du(r) ** 2, "num2": lambda r: r * r * u(r) ** 2,
                "den": lambda r: u(r) ** 2}
    if kind == "ckn":
        return {"num1": lambda r: du(r) ** 2,
                "num2": lambda r: np.abs(u(r)) ** (2 * p - 2) / r ** (2 * q - 2),
                "den": lambda r: np.abs(u(r)) ** p / r ** q}
    raise InputError(f"unknown quotient kind {kind!r}; choose from {KINDS}")


def _combine(kind, I):
    if kind in ("eigenvalue", "hardy"):
        return I["num1"] / I["den"]
    return I["num1"] * I["num2"] / I["den"] ** 2


# ---------------------------------------------------------------- parameter domains


def validate_params(kind: str, n: int, p=None, q=None) -> list[str]:
    """Every parameter-domain violation for a quotient (empty list when valid)."""
    errs = []
    if kind not in KINDS:
        return [f"unknown quotient kind {kind!r}; choose from {', '.join(KINDS)}"]
    if kind in ("eigenvalue", "hardy", "ckn") and p is None:
        errs.append(f"{kind} requires p")
    if kind == "eigenvalue" and p is not None and not p >= 1:
        errs.append("eigenvalue quotient requires p >= 1")
    if kind == "hardy" and p is not None and not 1 < p < n:
        errs.append(f"Hardy requires 1 < p < n (got p = {p}, n = {n}); "
                    "for p >= n the weighted integral of |u|^p / r^p diverges near the base point")
    if kind == "ckn":
        if q is None:
            errs.append("ckn requires q")
        elif p is not None:
            if not 0 < q < 2 < p:
                errs.append(f"CKN requires 0 < q < 2 < p (got p = {p}, q = {q})")
            elif not 2 < n < 2 * (p - q) / (p - 2):
                errs.append(f"CKN requires 2 < n < 2(p-q)/(p-2) = {2 * (p - q) / (p - 2):g} (got n = {n})")
    return errs


def sharp_constant(kind: str, n: int, p=None, q=None) -> float:
    """((n-p)/p)^p for Hardy, n^2/4 for HPW, (n-q)^2/p^2 for CKN."""
    errs = validate_params(kind, n, p, q)
    if errs:
        raise InputError("; ".join(errs))
    if kind == "hardy":
        return ((n - p) / p) ** p
    if kind == "hpw":
        return n * n / 4.0
    if kind == "ckn":
        return (n - q) ** 2 / p ** 2
    raise InputError("the eigenvalue quotient has no sharp reference constant")


# ---------------------------------------------------------------- quotients


@dataclass
class QuotientRow:
    alpha: float
    num1: float
    num2: float | None
    den: float
    quotient: float
    method: str = "radial"


def quotient_eval(kind: str, spec: FinslerMetricSpec, measure: MeasureSpec, o, testfn: TestFunction,
                  quad: QuadratureConfig = DEFAULT_QUAD, *, p=None, q=None, seed: int = 0) -> QuotientRow:
    """Evaluate one quotient for one test function.

    Integrals carry the angular factor, so they are the actual integrals over
    the space.  o = 0 uses the radial reduction; any other base point falls
    back to Monte Carlo.
    """
    n = spec.dim
    if testfn.kind == "ckn":
        p = testfn.p if p is None else p
        q = testfn.q if q is None else q
    if kind == "hpw":
        p = 2 if p is None else p
    errs = validate_params(kind, n, p, q)
    if errs:
        raise InputError("; ".join(errs))
    o = spec.check_interior(np.asarray(o, float))
    ints = _integrands(kind, testfn, p, q)
    if np.any(o != 0):
        est = montecarlo_quotient_integrals(kind, spec, measure, o, testfn, p=p, q=q,
                                            samples=quad.mc_samples, seed=seed)
        I = {k: v[0] for k, v in est.items()}
        method = "montecarlo"
    else:
        model = radial_model_for(spec, measure)
        smax = 1.0
        if testfn.cutoff is not None:
            smax = float(model.s_of_r(testfn.cutoff))
        I = {}
        for name, g in ints.items():
            try:
                I[name] = model.angular * radial_integral(g, n, quad, model=model, s_max=smax)
            except DivergenceError as exc:
                raise DivergenceError(f"the {kind} integral '{name}' diverges: {exc}", **exc.details) from exc
        method = "radial"
    return QuotientRow(testfn.alpha, I["num1"], I.get("num2"), I["den"], _combine(kind, I), method)


@dataclass
class QuotientSweep:
    kind: str
    rows: list
    slopes: list
    sharp_const: float
    monotone: bool
    params: dict = field(default_factory=dict)

    @property
    def quotients(self):
        return np.array([r.quotient for r in self.rows])

    @property
    def alphas(self):
        return np.array([r.alpha for r in self.rows])

    def to_records(self):
        out = []
        for r, s in zip(self.rows, self.slopes):
            out.append({"alpha": r.alpha, "num1": r.num1, "num2": r.num2, "den": r.den,
                        "quotient": r.quotient, "slope": s, "sharp_const": self.sharp_const})
        return out

    def to_csv(self):
        def f(v):
            return "" if v is None else repr(float(v))

        lines = ["alpha,num1,num2,den,quotient,slope,sharp_const"]
        for rec in self.to_records():
            lines.append(",".join(f(rec[k]) for k in
                                  ("alpha", "num1", "num2", "den", "quotient", "slope", "sharp_const")))
        return "\n".join(lines) + "\n"

    def to_json(self):
        import json

        return json.dumps({"kind": self.kind, "params": self.params, "sharp_const": self.sharp_const,
                           "monotone": self.monotone, "rows": self.to_records()},
                          indent=2, sort_keys=True, allow_nan=True)


DEFAULT_ALPHAS = (1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01)


def make_testfn(kind, alpha, p=None, q=None, cutoff=None):
    if kind == "ckn":
        return CKNBubble(alpha, p, q)
    return GaussianBubble(alpha, cutoff)


def alpha_sweep(kind: str, spec: FinslerMetricSpec, measure: MeasureSpec, alphas=DEFAULT_ALPHAS,
                params: dict | None = None, quad: QuadratureConfig = DEFAULT_QUAD, *,
                expect_decrease: bool | None = None, cutoff: float | None = None) -> QuotientSweep:
    """Quotient for each alpha (strictly decreasing list) with log-log slopes.

    ``expect_decrease`` defaults to True on Funk-type metrics, where the
    quotients must fall monotonically; a violation raises
    :class:`BoundViolation`.
    """
    params = dict(params or {})
    p, q = params.get("p"), params.get("q")
    a = np.asarray(alphas, float)
    if a.size == 0 or np.any(a <= 0) or np.any(np.diff(a) >= 0):
        raise InputError("alpha list must be positive and strictly decreasing")
    n = spec.dim
    rows = [quotient_eval(kind, spec, measure, np.zeros(n), make_testfn(kind, al, p, q, cutoff), quad,
                          p=p, q=q) for al in a]
    Q = np.array([r.quotient for r in rows])
    slopes = [None] + [float(np.log(Q[i - 1] / Q[i]) / np.log(a[i - 1] / a[i])) for i in range(1, len(a))]
    try:
        sharp = sharp_constant(kind, n, p if kind != "hpw" else None, q)
    except InputError:
        sharp = float("nan")
    monotone = bool(np.all(np.diff(Q) < 0))
    if expect_decrease is None:
        expect_decrease = spec.funk_type
    if expect_decrease and not monotone:
        i = int(np.argmax(np.diff(Q) >= 0)) + 1
        raise BoundViolation(f"{kind} quotient does not decrease at alpha = {a[i]}", worst=rows[i])
    return QuotientSweep(kind, rows, slopes, sharp, monotone, params)


# ---------------------------------------------------------------- bounds and contrasts


@dataclass
class BubbleBoundReport:
    alpha: float
    p: float
    lhs_u: float
    rhs_u: float
    lhs_du: float
    rhs_du: float

    @property
    def slack_u(self):
        return self.rhs_u - self.lhs_u

    @property
    def slack_du(self):
        return self.rhs_du - self.lhs_du


def bubble_bound_check(spec: FinslerMetricSpec, measure: MeasureSpec, alpha: float, p: float,
                       quad: QuadratureConfig = DEFAULT_QUAD, k: float = 0.5) -> BubbleBoundReport:
    """Check the a priori bounds on the Gaussian bubble on a Funk domain.

    int |u|^p dm <= I / (p alpha k^{n-1}) and int F*(du)^p dm <= alpha^{p-1} I / (p k^{n-1})
    with I = n omega_n the integral of distortion of the BH measure.
    """
    if not spec.funk_type:
        raise InputError("bubble bounds are stated for Funk-type metrics")
    if not p >= 1:
        raise InputError("bubble bounds need p >= 1")
    n = spec.dim
    model = radial_model_for(spec, measure)
    tf = GaussianBubble(alpha)
    I = n * unit_ball_volume(n)
    lu = model.angular * radial_integral(lambda r: np.abs(tf.u(r)) ** p, n, quad, model=model)
    ld = model.angular * radial_integral(lambda r: tf.du(r) ** p, n, quad, model=model)
    rep = BubbleBoundReport(alpha, p, lu, I / (p * alpha * k ** (n - 1)), ld,
                            alpha ** (p - 1) * I / (p * k ** (n - 1)))
    if rep.slack_u < 0 or rep.slack_du < 0:
        raise BoundViolation("bubble bound violated", worst=rep)
    return rep


@dataclass
class ContrastRow:
    kind: str
    alpha: float
    quotient: float
    sharp: float
    ok: bool


def reversible_contrast(spec: FinslerMetricSpec, measure: MeasureSpec, kinds=("hardy", "hpw"),
                        alphas=DEFAULT_ALPHAS, p: float = 2.0, cutoff: float | None = 8.0,
                        quad: QuadratureConfig = DEFAULT_QUAD, rtol: float = 1e-6) -> list[ContrastRow]:
    """Positive control: on a reversible space with vanishing S-curvature the quotients
    stay above the sharp constants.

    Gaussian bubbles are not square integrable on hyperbolic space for small
    alpha, so by default they are cut off at distance ``cutoff``.
    """
    n = spec.dim
    out = []
    for kind in kinds:
        pk = p if kind == "hardy" else None
        sharp = sharp_constant(kind, n, pk)
        for al in alphas:
            row = quotient_eval(kind, spec, measure, np.zeros(n), GaussianBubble(al, cutoff), quad, p=pk)
            out.append(ContrastRow(kind, al, row.quotient, sharp, row.quotient >= sharp * (1 - rtol)))
    bad = [r for r in out if not r.ok]
    if bad:
        raise BoundViolation(f"{len(bad)} quotient(s) fell below the sharp constant", worst=bad[0])
    return out


# ---------------------------------------------------------------- Monte Carlo


def _box(spec):
    dn = spec.domain_norm
    if dn is None:
        raise InputError("Monte Carlo integration needs a bounded domain")
    E = np.eye(spec.dim)
    hi = np.asarray(dual_norm(dn, E), float)
    lo = -np.asarray(dual_norm(dn, -E), float)
    return lo, hi


def _density_batch(spec, measure, X):
    k = measure.kind
    if k == "lebesgue":
        return np.ones(len(X))
    if k == "constant":
        return np.full(len(X), measure.c)
    if k == "funk-bh" or (k == "bh" and spec.funk_type):
        return np.full(len(X), bh_density(spec, measure, np.zeros(spec.dim)))
    if k == "bh" and isinstance(spec, InterpolatedFunk):
        return interpolated_bh_density(spec.a, spec.dim, X)
    fn = log_density_fn(spec, measure)
    if fn is not None:
        batch = jitted(spec, ("logsigma-batch", measure), lambda: jax.vmap(fn))
        return np.exp(np.asarray(batch(jnp.asarray(X))))
    return np.array([bh_density(spec, measure, x) for x in X])


def montecarlo_integrals(spec: FinslerMetricSpec, measure: MeasureSpec, fs: dict, samples: int = 2 ** 20,
                         seed: int = 0, replicates: int = 16, transform=None, *, center=None,
                         warp: float = 1.0) -> dict:
    """Randomised-QMC estimates of several integrals over the domain on shared points.

    ``fs`` maps names to vectorised point functions f(X) with X of shape (m, n);
    with ``transform`` given they receive transform(X) instead, computed once.
    Scrambled Sobol points fill the bounding box given by the support function,
    points outside the domain are rejected, and the spread over ``replicates``
    independent scramblings gives the standard error.  Returns
    {name: (value, stderr)}.

    ``warp`` = m > 1 switches to sampling y uniformly in a Euclidean ball of
    radius L about ``center`` and pushing it through x = center + y (|y|/L)^(m-1).
    The Jacobian m (|y|/L)^(n(m-1)) damps integrands that blow up like
    |x - center|^(-s), and the variance stays finite once m >= n / (n - s).
    """
    n = spec.dim
    lo, hi = _box(spec)
    per = max(samples // replicates, 2)
    m = int(math.ceil(math.log2(per)))
    if warp != 1.0:
        if warp < 1.0:
            raise InputError(f"warp exponent must be >= 1, got {warp}")
        c = np.zeros(n) if center is None else np.asarray(center, float)
        corners = np.array(np.meshgrid(*zip(lo, hi))).reshape(n, -1).T
        L = float(np.max(np.linalg.norm(corners - c, axis=1)))
        lo, hi = c - L, c + L
    vol = float(np.prod(hi - lo))
    ss = np.random.SeedSequence(seed)
    est = {k: [] for k in fs}
    acc = []
    for child in ss.spawn(replicates):
        u = qmc.Sobol(d=n, scramble=True, seed=np.random.default_rng(child)).random_base2(m)
        X = lo + u * (hi - lo)
        jac = np.ones(len(X))
        if warp != 1.0:
            Y = X - c
            t = np.linalg.norm(Y, axis=1) / L
            keep = t < 1.0
            X = np.where(keep[:, None], c + Y * (t ** (warp - 1.0))[:, None], c + 2 * L)
            jac = np.where(keep, warp * t ** (n * (warp - 1.0)), 0.0)
        inside = (spec.domain_norm.value(X) < 1.0) & (jac > 0)
        acc.append(inside.mean())
        Xi = X[inside]
        w = _density_batch(spec, measure, Xi) * jac[inside]
        Z = Xi if transform is None else transform(Xi)
        for k, f in fs.items():
            vals = np.zeros(len(X))
            vals[inside] = f(Z) * w
            est[k].append(vol * vals.mean())
    if min(acc) < 0.01:
        raise InputError(f"Monte Carlo acceptance rate {min(acc):.3%} is below 1%: bounding box too loose")
    out = {}
    for k, v in est.items():
        v = np.asarray(v)
        out[k] = (float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v))))
    return out


def montecarlo_integral(spec: FinslerMetricSpec, measure: MeasureSpec, f, samples: int = 2 ** 20,
                        seed: int = 0, replicates: int = 16):
    """(value, standard error) of the integral of f dm; see :func:`montecarlo_integrals`."""
    return montecarlo_integrals(spec, measure, {"f": f}, samples, seed, replicates)["f"]


def montecarlo_quotient_integrals(kind, spec, measure, o, testfn, *, p=None, q=None,
                                  samples: int = 2 ** 20, seed: int = 0) -> dict:
    """Monte Carlo versions of the quotient integrals, with r(x) = d(o, x) from the ray formula.

    Sampling is warped toward o just enough to give the r^(-p) (Hardy) or
    r^(-q) (CKN) weight a finite variance, so the standard errors are honest.
    """
    o = np.asarray(o, float)
    ints = _integrands(kind, testfn, p, q)
    n = spec.dim
    sing = {"hardy": p, "ckn": q}.get(kind) or 0.0
    if sing >= n:
        raise InputError(f"weight r^(-{sing}) is not locally integrable in dimension {n}")
    warp = float(math.ceil(n / (n - sing))) if sing > 0 else 1.0

    def dist(X):
        return funk_distance(spec, np.broadcast_to(o, X.shape), X)

    def wrap(g):
        def f(r):
            with np.errstate(divide="ignore", invalid="ignore"):
                v = g(r)
            return np.where(r > 0, v, 0.0)

        return f

    return montecarlo_integrals(spec, measure, {k: wrap(g) for k, g in ints.items()}, samples, seed,
                                transform=dist, center=o, warp=warp)
