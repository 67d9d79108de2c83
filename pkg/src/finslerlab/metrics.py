"""Finsler metrics on convex domains: Minkowski, Funk, Hilbert and the interpolated family.

Each metric offers a batched numpy evaluation ``value(x, y)`` and a single-point
jax evaluation ``jax_F(x, y)`` used for derivatives.  For the general Funk metric
the jax path differentiates the implicit equation phi(x + y/F) = 1 rather than
the root solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import optimize

from . import kernels
from ._jax import jax, jnp
from .errors import DomainError, InputError, NumericError
from .norms import (
    EPS,
    Euclidean,
    MinkowskiNorm,
    PowerSum,
    _dual_generic,
    dual_norm,
    sup_on_sphere,
)

# jitted helpers, one per (metric, name)
_JIT: dict = {}


def jitted(metric, name, build):
    key = (metric, name)
    fn = _JIT.get(key)
    if fn is None:
        fn = _JIT[key] = jax.jit(build())
    return fn


def _as2d(a, n):
    a = np.asarray(a, float)
    if a.shape[-1] != n:
        raise InputError(f"expected vectors of length {n}, got shape {a.shape}")
    return a


class FinslerMetricSpec:
    """Base class of all metric kinds.

    Subclasses are frozen dataclasses, hence hashable, which lets derivative
    code cache one compiled function per metric.
    """

    kind: str = "?"
    dim: int
    domain_norm: MinkowskiNorm | None = None
    funk_type: bool = False     # satisfies F(x + s y, y) = F / (1 - F s)
    reversible: bool = False

    # -- evaluation
    def value(self, x, y):
        raise NotImplementedError

    def jax_F(self, x, y):
        raise NotImplementedError

    def __call__(self, x, y):
        return metric_eval(self, x, y)

    # -- domain
    def inside(self, x):
        x = np.asarray(x, float)
        if self.domain_norm is None:
            return np.ones(x.shape[:-1], bool)
        return self.domain_norm.value(x) < 1.0

    def check_interior(self, x):
        x = _as2d(x, self.dim)
        ok = self.inside(x)
        if not np.all(ok):
            raise DomainError("point(s) not in the domain interior", points=np.asarray(x)[~ok][:3])
        return x


@dataclass(frozen=True)
class Minkowski(FinslerMetricSpec):
    """F(x, y) = phi(y) on all of R^n."""

    norm: MinkowskiNorm
    kind = "minkowski"

    @property
    def dim(self):
        return self.norm.dim

    @property
    def reversible(self):
        return self.norm.reversible

    def value(self, x, y):
        return self.norm.value(np.asarray(y, float))

    def jax_F(self, x, y):
        return self.norm.value(y, jnp)


def _funk_jax(phi):
    """Funk metric of the domain {phi < 1} as a jax function with implicit derivatives.

    Differentiating F = phi(y + x F) gives
    dF = grad phi(z) . (dy + F dx) / (1 - grad phi(z) . x),  z = y + x F.
    """
    dphi = jax.grad(phi)

    @jax.custom_jvp
    def F(x, y):
        ny = phi(y)
        safe = jnp.where(ny > 0, ny, 1.0)
        hi0 = 1.0 / safe
        hi = jax.lax.while_loop(lambda h: phi(x + h * y) < 1.0, lambda h: 2.0 * h, hi0)

        def bis(i, st):
            lo, hi = st
            mid = 0.5 * (lo + hi)
            below = phi(x + mid * y) < 1.0
            return jnp.where(below, mid, lo), jnp.where(below, hi, mid)

        lo, hi = jax.lax.fori_loop(0, 200, bis, (0.0, hi))
        s = 0.5 * (lo + hi)
        for _ in range(2):
            z = x + s * y
            s = s - (phi(z) - 1.0) / jnp.dot(dphi(z), y)
        return jnp.where(ny > 0, 1.0 / s, 0.0)

    @F.defjvp
    def F_jvp(primals, tangents):
        x, y = primals
        dx, dy = tangents
        f = F(x, y)
        z = y + x * f
        g = dphi(z)
        return f, jnp.dot(g, dy + f * dx) / (1.0 - jnp.dot(g, x))

    return F


@dataclass(frozen=True)
class Funk(FinslerMetricSpec):
    """Funk metric of Omega = {phi < 1}: x + y / F(x, y) lies on the boundary."""

    norm: MinkowskiNorm
    allow_flat_boundary: bool = False
    kind = "funk"
    funk_type = True

    def __post_init__(self):
        if isinstance(self.norm, PowerSum) and self.norm.m > 1 and not self.allow_flat_boundary:
            raise InputError(
                "power-sum balls with m > 1 have boundary points of zero curvature and are "
                "excluded as Funk domains (pass allow_flat_boundary=True to override)")

    @property
    def dim(self):
        return self.norm.dim

    @property
    def domain_norm(self):
        return self.norm

    def value(self, x, y):
        x = self.check_interior(x)
        y = _as2d(y, self.dim)
        shape = np.broadcast_shapes(x.shape, y.shape)
        xb = np.broadcast_to(x, shape).reshape(-1, self.dim)
        yb = np.broadcast_to(y, shape).reshape(-1, self.dim)
        s = kernels.ray_exit(self.norm, xb, yb)
        if np.any(np.isnan(s)):
            raise NumericError("ray-exit root solve failed")
        return (1.0 / s).reshape(shape[:-1])

    @cached_property
    def _jF(self):
        return _funk_jax(lambda v: self.norm.value(v, jnp))

    def jax_F(self, x, y):
        return self._jF(x, y)


@dataclass(frozen=True)
class ExplicitBallFunk(FinslerMetricSpec):
    """Closed-form Funk metric of the Euclidean unit ball."""

    n: int
    kind = "funk-ball"
    funk_type = True

    @property
    def dim(self):
        return self.n

    @property
    def domain_norm(self):
        return Euclidean(self.n)

    @staticmethod
    def _formula(x, y, xp, a=1.0):
        xx = xp.sum(x * x, axis=-1)
        xy = xp.sum(x * y, axis=-1)
        yy = xp.sum(y * y, axis=-1)
        return (xp.sqrt(yy - xx * yy + xy * xy) + a * xy) / (1.0 - xx)

    def value(self, x, y):
        x = self.check_interior(x)
        return self._formula(x, _as2d(y, self.n), np)

    def jax_F(self, x, y):
        return self._formula(x, y, jnp)


@dataclass(frozen=True)
class InterpolatedFunk(FinslerMetricSpec):
    """F_a = (sqrt(|y|^2 - |x|^2|y|^2 + <x,y>^2) + a <x,y>) / (1 - |x|^2) on the unit ball.

    a = 1 is the ball Funk metric, a = 0 the Klein metric.
    """

    a: float
    n: int
    kind = "interpolated"

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise InputError("InterpolatedFunk requires a in [0, 1]")

    @property
    def dim(self):
        return self.n

    @property
    def domain_norm(self):
        return Euclidean(self.n)

    @property
    def funk_type(self):
        return self.a == 1.0

    @property
    def reversible(self):
        return self.a == 0.0

    def value(self, x, y):
        x = self.check_interior(x)
        return ExplicitBallFunk._formula(x, _as2d(y, self.n), np, self.a)

    def jax_F(self, x, y):
        return ExplicitBallFunk._formula(x, y, jnp, self.a)


def KleinRiemannian(n: int) -> InterpolatedFunk:
    """The Klein model of hyperbolic space, curvature -1."""
    return InterpolatedFunk(0.0, n)


@dataclass(frozen=True)
class Hilbert(FinslerMetricSpec):
    """Symmetrisation (F(x, y) + F(x, -y)) / 2 of a Funk-type metric."""

    funk: FinslerMetricSpec
    kind = "hilbert"
    reversible = True

    def __post_init__(self):
        if not self.funk.funk_type:
            raise InputError("Hilbert needs a Funk-type base metric")

    @property
    def dim(self):
        return self.funk.dim

    @property
    def domain_norm(self):
        return self.funk.domain_norm

    def value(self, x, y):
        y = np.asarray(y, float)
        return 0.5 * (self.funk.value(x, y) + self.funk.value(x, -y))

    def jax_F(self, x, y):
        return 0.5 * (self.funk.jax_F(x, y) + self.funk.jax_F(x, -y))


FinslerMetric = FinslerMetricSpec


# ---------------------------------------------------------------- evaluation


def metric_eval(spec: FinslerMetricSpec, x, y):
    """F(x, y); batched over leading axes, float for single vectors."""
    v = spec.value(x, y)
    return float(v) if np.ndim(v) == 0 else np.asarray(v)


class _TangentNorm(MinkowskiNorm):
    """F(x, .) frozen at a point, so norm-level routines apply."""

    def __init__(self, spec, x):
        self.spec, self.x, self.dim = spec, np.asarray(x, float), spec.dim

    def value(self, y, xp=np):
        return self.spec.value(self.x, y)

    def grad(self, y):
        g = jitted(self.spec, "grad_y", lambda: jax.grad(self.spec.jax_F, 1))
        return np.asarray(g(jnp.asarray(self.x), jnp.asarray(y, float)))


def cometric_eval(spec: FinslerMetricSpec, x, xi, *, generic: bool = False):
    """F*(x, xi) = sup <y, xi> / F(x, y).

    Funk kinds use phi*(xi) - <x, xi>; everything else maximises numerically.
    """
    x = spec.check_interior(x)
    xi = _as2d(xi, spec.dim)
    if spec.funk_type and not generic and spec.domain_norm.dual_closed_form(xi) is not None:
        return dual_norm(spec.domain_norm, xi) - np.sum(x * xi, axis=-1)
    if isinstance(spec, Minkowski) and not generic:
        return dual_norm(spec.norm, xi)
    if x.ndim == 1 and xi.ndim == 1:
        return _dual_generic(_TangentNorm(spec, x), xi)
    xb, xib = np.broadcast_arrays(x, xi)
    out = [_dual_generic(_TangentNorm(spec, a), b)
           for a, b in zip(xb.reshape(-1, spec.dim), xib.reshape(-1, spec.dim))]
    return np.asarray(out).reshape(xb.shape[:-1])


def metric_reversibility(spec: FinslerMetricSpec, x, budget: int = 4096) -> float:
    """lambda_F(x) = sup F(x, -y) / F(x, y).

    For Funk kinds whose domain norm has a closed-form dual the supremum is
    taken over co-vectors, F*(x, -xi) / F*(x, xi); otherwise over vectors.
    Both give the same number since F and F* share their reversibility.
    """
    x = spec.check_interior(np.asarray(x, float))
    if spec.reversible:
        return 1.0
    dn = spec.domain_norm
    if spec.funk_type and dn.dual_closed_form(np.eye(spec.dim)) is not None:
        def ratio(xi):
            xx = xi @ x
            return (dn.dual_closed_form(-xi) + xx) / (dn.dual_closed_form(xi) - xx)
    else:
        def ratio(y):
            return spec.value(x, -y) / spec.value(x, y)
    val, _ = sup_on_sphere(ratio, spec.dim, budget)
    return max(val, 1.0)


def sup_reversibility(spec: FinslerMetricSpec, depth: int = 7, directions: int = 16) -> float:
    """Estimate sup_x lambda_F(x) by walking rays toward the boundary.

    Radii approach the boundary as 1 - 10^-k, k = 1..depth.  Returns inf if the
    values keep growing geometrically (the Funk case).
    """
    from .quadrature import sphere_directions

    dirs = sphere_directions(spec.dim, directions, seed=3)
    vals = []
    for k in range(1, depth + 1):
        t = 1.0 - 10.0 ** (-k)
        best = 0.0
        for d in dirs:
            dn = spec.domain_norm
            x = t * d / (dn.value(d) if dn is not None else 1.0)
            best = max(best, metric_reversibility(spec, x, budget=512))
        vals.append(best)
    if vals[-1] > 5 * vals[-2] > 25 * vals[-3]:
        return math.inf
    return vals[-1]


# ---------------------------------------------------------------- distance


def _funk_pair_distance(spec, x1, x2):
    x1 = np.atleast_2d(x1)
    x2 = np.atleast_2d(x2)
    d = x2 - x1
    same = ~np.any(d != 0, axis=-1)
    s = kernels.ray_exit(spec.domain_norm, x1, np.where(same[:, None], 1.0, d))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(s) - np.log(s - 1.0)
    out[same] = 0.0
    return out


def funk_distance(spec: FinslerMetricSpec, x1, x2):
    """Forward distance d(x1, x2) for Funk, Hilbert and interpolated kinds.

    Funk: with z the boundary point on the ray from x1 through x2,
    d = ln(phi(z - x1) / phi(z - x2)), which reduces to ln(s / (s - 1)) for
    z = x1 + s (x2 - x1).  Hilbert averages the two orientations.  F_a is
    a F_1 + (1 - a) F_0 with straight geodesics, so its distance combines the
    two the same way.
    """
    x1 = spec.check_interior(x1)
    x2 = spec.check_interior(x2)
    single = x1.ndim == 1 and x2.ndim == 1
    x1, x2 = np.broadcast_arrays(np.atleast_2d(x1), np.atleast_2d(x2))
    if spec.funk_type:
        out = _funk_pair_distance(spec, x1, x2)
    elif isinstance(spec, Hilbert):
        out = 0.5 * (_funk_pair_distance(spec.funk, x1, x2) + _funk_pair_distance(spec.funk, x2, x1))
    elif isinstance(spec, InterpolatedFunk):
        ball = ExplicitBallFunk(spec.n)
        fw = _funk_pair_distance(ball, x1, x2)
        bw = _funk_pair_distance(ball, x2, x1)
        out = spec.a * fw + (1 - spec.a) * 0.5 * (fw + bw)
    else:
        raise InputError(f"no distance formula for metric kind {spec.kind!r}")
    return float(out[0]) if single else out


def distance_from_origin_closed(spec: FinslerMetricSpec, x):
    """d(0, x) = -ln(1 - phi(x)) on a Funk domain."""
    if not spec.funk_type:
        raise InputError("closed-form radial distance needs a Funk-type metric")
    x = spec.check_interior(x)
    return -np.log1p(-spec.domain_norm.value(x))


# ---------------------------------------------------------------- spray and geodesics


def _spray_builder(spec):
    def L(x, y):
        return spec.jax_F(x, y) ** 2

    def G(x, y):
        g = 0.5 * jax.jacfwd(jax.jacfwd(L, 1), 1)(x, y)
        mixed = jax.jacfwd(jax.jacfwd(L, 1), 0)(x, y)
        gx = jax.grad(L, 0)(x, y)
        return 0.25 * jnp.linalg.solve(g, mixed @ y - gx)

    return G


def spray_fn(spec):
    """Jitted G(x, y), with G^i = (1/4) g^{il} (d^2 F^2/dx^k dy^l y^k - dF^2/dx^l)."""
    return jitted(spec, "spray", lambda: _spray_builder(spec))


def spray_coefficients(spec: FinslerMetricSpec, x, y):
    x = spec.check_interior(x)
    y = _as2d(y, spec.dim)
    if not np.any(y):
        raise DomainError("spray coefficients need y != 0")
    G = np.asarray(spray_fn(spec)(jnp.asarray(x), jnp.asarray(y)))
    if not np.all(np.isfinite(G)):
        raise NumericError("singular fundamental tensor while forming the spray", x=x, y=y)
    return G


def projective_factor(spec: FinslerMetricSpec, x, y, method: str = "closed"):
    """P with G = P y.

    ``closed``: F/2 for Funk, (F(x,y) - F(x,-y))/2 for Hilbert, 0 for Minkowski.
    ``generic``: y^k dF/dx^k / (2F), valid for every projectively flat kind.
    """
    x = spec.check_interior(x)
    y = _as2d(y, spec.dim)
    if method == "closed":
        if spec.funk_type:
            return 0.5 * metric_eval(spec, x, y)
        if isinstance(spec, Hilbert):
            return 0.5 * (metric_eval(spec.funk, x, y) - metric_eval(spec.funk, x, -y))
        if isinstance(spec, Minkowski):
            return 0.0
        method = "generic"
    if method != "generic":
        raise InputError(f"unknown method {method!r}")
    fn = jitted(spec, "proj", lambda: lambda x, y: jnp.dot(jax.grad(spec.jax_F, 0)(x, y), y)
                / (2 * spec.jax_F(x, y)))
    return float(fn(jnp.asarray(x), jnp.asarray(y)))


@dataclass(frozen=True)
class GeodesicState:
    position: np.ndarray
    velocity: np.ndarray
    parameter: float


def _rk4_builder(spec):
    G = _spray_builder(spec)

    def rhs(x, v):
        return v, -2.0 * G(x, v)

    def run(x, v, h, nsub):
        def step(i, st):
            x, v = st
            k1x, k1v = rhs(x, v)
            k2x, k2v = rhs(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
            k3x, k3v = rhs(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
            k4x, k4v = rhs(x + h * k3x, v + h * k3v)
            return (x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x),
                    v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v))

        return jax.lax.fori_loop(0, nsub, step, (x, v))

    return run


def geodesic_integrate(spec: FinslerMetricSpec, x0, y0, length: float, steps: int = 10,
                       max_step: float = 1e-3) -> list[GeodesicState]:
    """Integrate x'' = -2 G(x, x') with classical RK4 at unit F-speed.

    Returns ``steps + 1`` states at equal arclength spacing; ``parameter`` is
    the arclength.  Every RK4 step covers at most ``max_step`` of arclength.
    """
    x0 = spec.check_interior(x0)
    y0 = _as2d(y0, spec.dim)
    if length < 0 or steps < 1:
        raise InputError("need length >= 0 and steps >= 1")
    f0 = metric_eval(spec, x0, y0)
    if not f0 > 0:
        raise InputError("initial velocity must have positive length")
    v = y0 / f0
    seg = length / steps
    nsub = max(1, int(math.ceil(seg / max_step))) if seg > 0 else 0
    h = seg / nsub if nsub else 0.0
    run = jitted(spec, "rk4", lambda: _rk4_builder(spec))
    x = np.array(x0)
    out = [GeodesicState(x.copy(), v.copy(), 0.0)]
    for k in range(1, steps + 1):
        if nsub:
            xj, vj = run(jnp.asarray(x), jnp.asarray(v), h, nsub)
            x, v = np.asarray(xj), np.asarray(vj)
        if not np.all(np.isfinite(x)) or not spec.inside(x):
            raise NumericError("geodesic left the domain", arclength=k * seg, position=x)
        out.append(GeodesicState(x.copy(), v.copy(), k * seg))
    return out


def geodesic_arclength(spec: FinslerMetricSpec, x1, x2, guess: float | None = None) -> float:
    """Arclength from x1 to x2 along the integrated geodesic (projectively flat kinds).

    Shoots along the chord for the guessed length, then applies one Newton
    correction using the along-chord residual and the final velocity.
    """
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    d = x2 - x1
    nd = np.linalg.norm(d)
    if nd == 0:
        return 0.0
    if guess is None:
        guess = funk_distance(spec, x1, x2)
    end = geodesic_integrate(spec, x1, d, guess, steps=1)[-1]
    u = d / nd
    delta = (x2 - end.position) @ u
    return guess + delta / (end.velocity @ u)


def eikonal_residual(spec: FinslerMetricSpec, o, x, *, flip: bool = False) -> float:
    """|F*(x, dr) - 1| with r = d(o, .) differentiated by central differences.

    ``flip`` evaluates F*(x, -dr) instead, which differs from 1 for
    irreversible metrics.
    """
    o = spec.check_interior(o)
    x = spec.check_interior(x)
    if not np.any(x != o):
        raise DomainError("the distance function is not differentiable at the base point")
    h = EPS ** (1 / 3) * max(1.0, float(np.linalg.norm(x)))
    E = np.eye(spec.dim) * h
    plus = funk_distance(spec, np.broadcast_to(o, E.shape), x + E)
    minus = funk_distance(spec, np.broadcast_to(o, E.shape), x - E)
    dr = (plus - minus) / (2 * h)
    if flip:
        dr = -dr
    return abs(float(cometric_eval(spec, x, dr)) - 1.0)
