"""Measures on Finsler domains, domain volumes, polar profiles and volume comparison.

Densities are always taken with respect to Lebesgue measure in the ambient
coordinates.  Four kinds are provided:

``lebesgue``     sigma = 1
``constant``     sigma = c
``bh``           Busemann-Hausdorff density of the metric itself, omega_n / vol(B_x)
``funk-bh``      the constant omega_n / vol(Omega) of the domain's Funk metric,
                 used with Hilbert metrics
``riemannian``   sqrt(det g(x)), only meaningful for Riemannian metrics
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._jax import jax, jnp
from .errors import BoundViolation, DivergenceError, DomainError, InputError, NumericError
from .metrics import (
    ExplicitBallFunk,
    FinslerMetricSpec,
    Hilbert,
    InterpolatedFunk,
    Minkowski,
    jitted,
)
from .norms import EPS, Ellipsoid, Euclidean, MinkowskiNorm
from .quadrature import (
    DEFAULT_QUAD,
    QuadratureConfig,
    gauss_legendre,
    sphere_area,
    sphere_integral,
    sphere_integral_qmc,
    unit_ball_volume,
)

MEASURE_KINDS = ("lebesgue", "constant", "bh", "funk-bh", "riemannian")


@dataclass(frozen=True)
class MeasureSpec:
    kind: str = "bh"
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in MEASURE_KINDS:
            raise InputError(f"unknown measure kind {self.kind!r}; choose from {MEASURE_KINDS}")
        if not self.c > 0:
            raise InputError("density constant must be positive")


def Lebesgue():
    return MeasureSpec("lebesgue")


def BusemannHausdorff():
    return MeasureSpec("bh")


def ConstantDensity(c: float):
    return MeasureSpec("constant", float(c))


def FunkBH():
    return MeasureSpec("funk-bh")


def Riemannian():
    return MeasureSpec("riemannian")


# ---------------------------------------------------------------- volumes


def _volume_integrand(norm_value, n):
    return lambda om: norm_value(om) ** (-n) / n


def _sphere_volume(norm_value, n, rtol=1e-9, return_error=False, samples=2 ** 18):
    if n == 1:
        e = np.array([[1.0], [-1.0]])
        v = float(np.sum(1.0 / norm_value(e)))
        return (v, 0.0) if return_error else v
    f = _volume_integrand(norm_value, n)
    if n in (2, 3):
        res = 16
        prev = sphere_integral(f, n, res)
        # the n = 3 grid has 8 res^2 nodes; stop before it outgrows memory
        for _ in range(9 if n == 2 else 6):
            res *= 2
            cur = sphere_integral(f, n, res)
            if abs(cur - prev) <= rtol * abs(cur):
                return (cur, abs(cur - prev)) if return_error else cur
            prev = cur
        raise NumericError("volume quadrature did not converge", last_estimates=(prev, cur))
    val, err = sphere_integral_qmc(f, n, samples=samples, replicates=16)
    return (val, err) if return_error else val


def domain_volume(domain: MinkowskiNorm, *, return_error: bool = False, rtol: float = 1e-9):
    """Euclidean volume of {phi < 1} = (1/n) * integral over S^{n-1} of phi^-n.

    n = 2, 3 use deterministic spherical quadrature refined until successive
    estimates agree to ``rtol``; n >= 4 uses randomised QMC and reports the
    standard error when ``return_error`` is set.
    """
    if isinstance(domain, Euclidean):
        v = unit_ball_volume(domain.dim)
        return (v, 0.0) if return_error else v
    if isinstance(domain, Ellipsoid):
        v = unit_ball_volume(domain.dim) * math.prod(domain.axes)
        return (v, 0.0) if return_error else v
    return _sphere_volume(domain.value, domain.dim, rtol, return_error)


@lru_cache(maxsize=256)
def _cached_domain_volume(domain):
    return domain_volume(domain)


def unit_ball_volume_at(spec: FinslerMetricSpec, x, rtol: float = 1e-10) -> float:
    """Euclidean volume of the tangent unit ball {y : F(x, y) < 1}."""
    x = spec.check_interior(x)
    return _sphere_volume(lambda om: spec.value(x, om), spec.dim, rtol)


# ---------------------------------------------------------------- densities


def _funk_constant(spec):
    n = spec.dim
    return unit_ball_volume(n) / _cached_domain_volume(spec.domain_norm)


def interpolated_bh_density(a: float, n: int, x):
    """Closed-form BH density of F_a: ((1 - a^2|x|^2) / (1 - |x|^2))^{(n+1)/2}.

    F_a is of Randers type, alpha + beta with beta = a <x,y>/(1-|x|^2); its BH
    volume element is sqrt(det a_ij) (1 - |b|_alpha^2)^{(n+1)/2}.
    """
    xx = np.sum(np.asarray(x, float) ** 2, axis=-1)
    return ((1.0 - a * a * xx) / (1.0 - xx)) ** ((n + 1) / 2)


def _interpolated_log_density_jax(a, n):
    def f(x):
        xx = jnp.dot(x, x)
        return 0.5 * (n + 1) * (jnp.log1p(-a * a * xx) - jnp.log1p(-xx))

    return f


def _riemannian_log_density_jax(spec):
    e = jnp.eye(spec.dim)[0]

    def f(x):
        g = 0.5 * jax.hessian(lambda y: spec.jax_F(x, y) ** 2)(e)
        return 0.5 * jnp.linalg.slogdet(g)[1]

    return f


def bh_density(spec: FinslerMetricSpec, measure: MeasureSpec, x, *, numeric: bool = False):
    """Density sigma(x) of ``measure`` for ``spec``.

    For the ``bh`` kind closed forms are used where known (constants on Funk
    and Minkowski spaces, the Randers formula for F_a); ``numeric=True`` forces
    omega_n / vol(B_x) from the x-dependent unit ball.
    """
    x = spec.check_interior(x)
    k = measure.kind
    if x.ndim > 1:
        return np.array([bh_density(spec, measure, xi, numeric=numeric)
                         for xi in x.reshape(-1, spec.dim)]).reshape(x.shape[:-1])
    if k == "lebesgue":
        return 1.0
    if k == "constant":
        return measure.c
    if k == "funk-bh":
        if spec.domain_norm is None:
            raise InputError("funk-bh needs a metric on a bounded domain")
        return _funk_constant(spec)
    if k == "riemannian":
        g = _riemannian_g(spec, x)
        return float(math.sqrt(np.linalg.det(g)))
    # bh
    n = spec.dim
    if not numeric:
        if spec.funk_type:
            return _funk_constant(spec)
        if isinstance(spec, Minkowski):
            return unit_ball_volume(n) / _cached_domain_volume(spec.norm)
        if isinstance(spec, InterpolatedFunk):
            return float(interpolated_bh_density(spec.a, n, x))
        if isinstance(spec, Hilbert) and isinstance(spec.domain_norm, Euclidean):
            return float(interpolated_bh_density(0.0, n, x))
    return unit_ball_volume(n) / unit_ball_volume_at(spec, x)


def _riemannian_g(spec, x):
    from .norms import fundamental_tensor

    return fundamental_tensor(spec, x, np.eye(spec.dim)[0])


def log_density_fn(spec: FinslerMetricSpec, measure: MeasureSpec):
    """jax function x -> ln sigma(x) when a differentiable form exists, else None."""
    k = measure.kind
    if k in ("lebesgue", "constant", "funk-bh"):
        return lambda x: 0.0 * jnp.sum(x)
    if k == "riemannian":
        return _riemannian_log_density_jax(spec)
    if spec.funk_type or isinstance(spec, Minkowski):
        return lambda x: 0.0 * jnp.sum(x)
    if isinstance(spec, InterpolatedFunk):
        return _interpolated_log_density_jax(spec.a, spec.dim)
    if isinstance(spec, Hilbert) and isinstance(spec.domain_norm, Euclidean):
        return _interpolated_log_density_jax(0.0, spec.dim)
    return None


def grad_log_density(spec, measure, x):
    """d(ln sigma)/dx, by automatic differentiation or central differences of the numeric density."""
    x = np.asarray(x, float)
    fn = log_density_fn(spec, measure)
    if fn is not None:
        g = jitted(spec, ("dlogsigma", measure), lambda: jax.grad(fn))
        return np.asarray(g(jnp.asarray(x)))
    h = EPS ** (1 / 3) * max(1.0, float(np.linalg.norm(x)))
    out = np.empty(spec.dim)
    for i in range(spec.dim):
        e = np.zeros(spec.dim)
        e[i] = h
        out[i] = (math.log(bh_density(spec, measure, x + e))
                  - math.log(bh_density(spec, measure, x - e))) / (2 * h)
    return out


# ---------------------------------------------------------------- polar profiles


def polar_density_funk(n: int, r):
    """Radial profile (1 - e^-r)^{n-1} e^-r of the BH measure about the origin of a Funk domain."""
    r = np.asarray(r, float)
    if np.any(r <= 0):
        raise DomainError("the polar profile is defined for r > 0")
    v = (-np.expm1(-r)) ** (n - 1) * np.exp(-r)
    return float(v) if v.ndim == 0 else v


def s_k(k: float, t):
    """Generalised sine: sin(sqrt(k) t)/sqrt(k), t, or sinh(sqrt(-k) t)/sqrt(-k)."""
    t = np.asarray(t, float)
    if k > 0:
        q = math.sqrt(k)
        return np.sin(q * t) / q
    if k < 0:
        q = math.sqrt(-k)
        return np.sinh(q * t) / q
    return t.copy()


def c_k(k: float, t):
    """Generalised cosine, the derivative of :func:`s_k`."""
    t = np.asarray(t, float)
    if k > 0:
        return np.cos(math.sqrt(k) * t)
    if k < 0:
        return np.cosh(math.sqrt(-k) * t)
    return np.ones_like(t)


@dataclass(frozen=True)
class ComparisonProfile:
    """Comparison data for Ric >= -(n-1)k^2 and S >= (n-1)h."""

    k: float
    h: float
    n: int

    def s(self, t):
        return s_k(-self.k ** 2, t)

    def c(self, t):
        return c_k(-self.k ** 2, t)

    def bound(self, r):
        r = np.asarray(r, float)
        return np.exp(-(self.n - 1) * self.h * r) * self.s(r) ** (self.n - 1)


def funk_profile(n: int) -> ComparisonProfile:
    """k = 1/2, h = (n+1)/(2(n-1)): the constants of every Funk domain with BH measure."""
    if n < 2:
        raise InputError("comparison needs n >= 2")
    return ComparisonProfile(0.5, (n + 1) / (2 * (n - 1)), n)


@dataclass
class ComparisonReport:
    r: np.ndarray
    density: np.ndarray
    bound: np.ndarray
    ratio: np.ndarray
    max_ratio: float
    worst_r: float
    equality_error: float

    def rows(self):
        return list(zip(self.r.tolist(), self.density.tolist(), self.bound.tolist(), self.ratio.tolist()))

    def to_csv(self):
        lines = ["r,density,bound,ratio"]
        lines += [f"{a!r},{b!r},{c!r},{d!r}" for a, b, c, d in self.rows()]
        return "\n".join(lines) + "\n"


def check_comparison(profile: ComparisonProfile, density, r_grid, *, rtol: float = 1e-8,
                     equality: bool = False) -> ComparisonReport:
    """Check density(r) <= bound(r) (1 + rtol) on the grid.

    ``equality`` additionally demands |ratio - 1| <= rtol, the constant-curvature
    equality case.  Violations raise :class:`BoundViolation` naming the worst r.
    """
    r = np.asarray(r_grid, float)
    d = np.asarray(density(r), float)
    b = profile.bound(r)
    ratio = d / b
    i = int(np.argmax(ratio))
    eq_err = float(np.max(np.abs(ratio - 1.0)))
    rep = ComparisonReport(r, d, b, ratio, float(ratio[i]), float(r[i]), eq_err)
    if ratio[i] > 1.0 + rtol:
        raise BoundViolation(f"comparison bound violated at r = {r[i]!r}: ratio {ratio[i]!r}", worst=rep)
    if equality and eq_err > rtol:
        j = int(np.argmax(np.abs(ratio - 1.0)))
        raise BoundViolation(f"equality case fails at r = {r[j]!r}: ratio {ratio[j]!r}", worst=rep)
    return rep


# ---------------------------------------------------------------- integral of distortion


@dataclass
class DistortionIntegral:
    analytic: float
    numeric: float | None
    rel_diff: float | None
    note: str = ""


def _indicatrix_integral_2d(spec, measure, o, m=512):
    """Integral over the F(o,.) unit circle of e^{-tau} against the g_y line element."""
    from .curvature import _geom_fn

    sigma = bh_density(spec, measure, o)
    theta = 2 * np.pi * np.arange(m) / m
    om = np.column_stack([np.cos(theta), np.sin(theta)])
    F = spec.value(o, om)
    y = om / F[:, None]
    # derivative of y(theta) = om / F(o, om) in theta
    dom = np.column_stack([-np.sin(theta), np.cos(theta)])
    geom = _geom_fn(spec)
    total = 0.0
    for yi, omi, domi, fi in zip(y, om, dom, F):
        out = geom(jnp.asarray(o), jnp.asarray(omi))
        g_om = np.asarray(out["g"])          # g is 0-homogeneous: g_y = g_om
        dF = float(np.asarray(out["dFy"]) @ domi)
        ydot = domi / fi - omi * dF / fi ** 2
        line = math.sqrt(ydot @ g_om @ ydot)
        e_tau = sigma / math.sqrt(np.linalg.det(g_om))
        total += e_tau * line
    return total * 2 * np.pi / m


def integral_of_distortion(spec: FinslerMetricSpec, measure: MeasureSpec, o) -> DistortionIntegral:
    """I(o) = integral over S_oM of e^{-tau(y)} d nu_o(y).

    BH measures give n omega_n.  A density sigma rescales this by
    sigma(o) / sigma_BH(o).  In dimension two the indicatrix integral is also
    evaluated numerically.
    """
    o = spec.check_interior(o)
    n = spec.dim
    base = n * unit_ball_volume(n)
    if measure.kind == "bh":
        analytic = base
    else:
        analytic = base * bh_density(spec, measure, o) / bh_density(spec, BusemannHausdorff(), o)
    if n == 2:
        num = _indicatrix_integral_2d(spec, measure, o)
        return DistortionIntegral(analytic, num, abs(num - analytic) / analytic)
    return DistortionIntegral(analytic, None, None,
                              "numerical indicatrix integration is only implemented for n = 2")


# ---------------------------------------------------------------- local finiteness


@dataclass
class FinitenessProbe:
    value: float
    divergent: bool
    cutoffs: tuple
    partial: tuple


def local_finiteness_probe(spec: FinslerMetricSpec, measure: MeasureSpec, o, p: float, R: float,
                           quad: QuadratureConfig = DEFAULT_QUAD) -> FinitenessProbe:
    """Integral of r^-p over the forward ball B+(o, R), or a divergence flag.

    Uses the radial reduction about the origin of a Funk domain with a
    constant density.  The integral is recomputed with inner cutoffs
    1e-4, 1e-8, 1e-12, 1e-16 in the radial variable; three successive
    increases above 10 % flag divergence.
    """
    from .quotients import funk_radial_model, radial_integral

    o = spec.check_interior(o)
    if R <= 0:
        raise InputError("R must be positive")
    if not spec.funk_type or np.any(o != 0):
        raise InputError("the radial probe needs a Funk-type metric and o = 0")
    if measure.kind not in ("lebesgue", "constant", "bh", "funk-bh"):
        raise InputError("the radial probe needs a constant density")
    n = spec.dim
    const = integral_of_distortion(spec, measure, o).analytic
    model = funk_radial_model(n)
    smax = -math.expm1(-R)
    cut = (1e-4, 1e-8, 1e-12, 1e-16)

    def g(r):
        return r ** (-p)

    partial = []
    for c in cut:
        partial.append(const * radial_integral(g, n, quad, model=model, s_min=c, s_max=smax))
    growth = [(b - a) / abs(a) for a, b in zip(partial[:-1], partial[1:])]
    divergent = all(gr > 0.10 for gr in growth)
    if divergent:
        return FinitenessProbe(math.inf, True, cut, tuple(partial))
    try:
        full = const * radial_integral(g, n, quad, model=model, s_max=smax)
    except DivergenceError:
        return FinitenessProbe(math.inf, True, cut, tuple(partial))
    return FinitenessProbe(full, False, cut, tuple(partial))
