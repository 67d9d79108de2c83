"""Riemann operator, flag and Ricci curvature, distortion, S-curvature and weighted Ricci.

All derivatives come from nested forward-mode differentiation of the spray,
which is itself built from F^2 by automatic differentiation.  A central
finite-difference path is kept for cross-checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._jax import jax, jnp
from .errors import DomainError, InputError, NumericError
from .measure import MeasureSpec, bh_density, grad_log_density
from .metrics import (
    FinslerMetricSpec,
    _rk4_builder,
    _spray_builder,
    jitted,
    metric_eval,
)
from .norms import EPS, fd_hessian_y


def _geom_builder(spec):
    G = _spray_builder(spec)

    def L(x, y):
        return spec.jax_F(x, y) ** 2

    def geom(x, y):
        F = spec.jax_F(x, y)
        dFy = jax.grad(spec.jax_F, 1)(x, y)
        g = 0.5 * jax.jacfwd(jax.jacfwd(L, 1), 1)(x, y)
        Gv = G(x, y)
        Gx = jax.jacfwd(G, 0)(x, y)
        Gy = jax.jacfwd(G, 1)(x, y)
        Gxy = jax.jacfwd(jax.jacfwd(G, 1), 0)(x, y)   # [i, k, j] = d^2 G^i / dy^k dx^j
        Gyy = jax.jacfwd(jax.jacfwd(G, 1), 1)(x, y)   # [i, k, j] = d^2 G^i / dy^k dy^j
        R = (2 * Gx - jnp.einsum("ikj,j->ik", Gxy, y)
             + 2 * jnp.einsum("ikj,j->ik", Gyy, Gv) - Gy @ Gy)
        return {"F": F, "dFy": dFy, "g": g, "G": Gv, "Gy": Gy, "R": R}

    return geom


def _geom_fn(spec):
    return jitted(spec, "geom", lambda: _geom_builder(spec))


def _geometry(spec, x, y):
    x = spec.check_interior(x)
    y = np.asarray(y, float)
    if y.shape != (spec.dim,):
        raise InputError(f"y must have shape ({spec.dim},)")
    if not np.any(y):
        raise DomainError("curvature needs a nonzero flagpole y")
    out = {k: np.asarray(v) for k, v in _geom_fn(spec)(jnp.asarray(x), jnp.asarray(y)).items()}
    if not all(np.all(np.isfinite(v)) for v in out.values()):
        raise NumericError("non-finite curvature data", x=x, y=y)
    return out


# ---------------------------------------------------------------- finite-difference path


def spray_fd(spec: FinslerMetricSpec, x, y):
    """Spray coefficients from central differences of the numpy F alone."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = spec.dim

    def L(xx, yy):
        return float(spec.value(xx, yy)) ** 2

    g = 0.5 * fd_hessian_y(L, x, y, step=EPS ** 0.25 * max(1.0, np.linalg.norm(y)))
    h1 = EPS ** (1 / 3)
    h2 = EPS ** 0.25
    gx = np.empty(n)
    mixed = np.empty((n, n))     # [l, k] = d^2 L / dy^l dx^k
    I = np.eye(n)
    for k in range(n):
        gx[k] = (L(x + h1 * I[k], y) - L(x - h1 * I[k], y)) / (2 * h1)
        for l in range(n):
            mixed[l, k] = (L(x + h2 * I[k], y + h2 * I[l]) - L(x + h2 * I[k], y - h2 * I[l])
                           - L(x - h2 * I[k], y + h2 * I[l]) + L(x - h2 * I[k], y - h2 * I[l])) / (4 * h2 * h2)
    return 0.25 * np.linalg.solve(g, mixed @ y - gx)


def riemann_operator_fd(spec: FinslerMetricSpec, x, y):
    """R^i_k with every derivative of G replaced by central differences of the AD spray."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = spec.dim
    Gf = jitted(spec, "spray", lambda: _spray_builder(spec))

    def G(a, b):
        return np.asarray(Gf(jnp.asarray(a), jnp.asarray(b)))

    I = np.eye(n)
    h1 = EPS ** (1 / 3)
    h2 = EPS ** 0.25
    Gv = G(x, y)
    Gx = np.column_stack([(G(x + h1 * I[k], y) - G(x - h1 * I[k], y)) / (2 * h1) for k in range(n)])
    Gy = np.column_stack([(G(x, y + h1 * I[k]) - G(x, y - h1 * I[k])) / (2 * h1) for k in range(n)])
    Gxy = np.empty((n, n, n))
    Gyy = np.empty((n, n, n))
    for k in range(n):
        for j in range(n):
            Gxy[:, k, j] = (G(x + h2 * I[j], y + h2 * I[k]) - G(x + h2 * I[j], y - h2 * I[k])
                            - G(x - h2 * I[j], y + h2 * I[k]) + G(x - h2 * I[j], y - h2 * I[k])) / (4 * h2 * h2)
            Gyy[:, k, j] = (G(x, y + h2 * I[j] + h2 * I[k]) - G(x, y - h2 * I[j] + h2 * I[k])
                            - G(x, y + h2 * I[j] - h2 * I[k]) + G(x, y - h2 * I[j] - h2 * I[k])) / (4 * h2 * h2)
    return (2 * Gx - np.einsum("ikj,j->ik", Gxy, y)
            + 2 * np.einsum("ikj,j->ik", Gyy, Gv) - Gy @ Gy)


# ---------------------------------------------------------------- curvature


def riemann_operator(spec: FinslerMetricSpec, x, y, method: str = "ad"):
    """R^i_k(x, y) = 2 dG^i/dx^k - y^j d^2G^i/dx^j dy^k + 2 G^j d^2G^i/dy^j dy^k - dG^i/dy^j dG^j/dy^k."""
    if method == "fd":
        return riemann_operator_fd(spec, x, y)
    if method != "ad":
        raise InputError(f"unknown method {method!r}")
    return _geometry(spec, x, y)["R"]


def _flag_from(geo, y, v):
    g, R, F = geo["g"], geo["R"], float(geo["F"])
    num = float((R @ v) @ g @ v)
    gvv = float(v @ g @ v)
    gyv = float(y @ g @ v)
    den = F * F * gvv - gyv * gyv
    if den <= 1e-14 * max(F * F * gvv, 1e-300):
        raise DomainError("degenerate flag: v is (numerically) parallel to y")
    return num / den


def flag_curvature(spec: FinslerMetricSpec, x, y, v) -> float:
    """K(y; v) = g_y(R_y v, v) / (F^2 g_y(v, v) - g_y(y, v)^2)."""
    y = np.asarray(y, float)
    v = np.asarray(v, float)
    return _flag_from(_geometry(spec, x, y), y, v)


def _transverse_basis(g, y, F):
    """g_y-orthonormal vectors completing y/F to a basis (Gram-Schmidt)."""
    n = len(y)
    basis = [y / F]
    for e in np.eye(n)[np.argsort(np.abs(y))]:
        w = e.copy()
        for b in basis:
            w -= (b @ g @ w) * b
        nw = math.sqrt(max(w @ g @ w, 0.0))
        if nw > 1e-8:
            basis.append(w / nw)
        if len(basis) == n:
            break
    return basis[1:]


def _ricci_from(geo, y):
    F = float(geo["F"])
    return sum(_flag_from(geo, y, e) for e in _transverse_basis(geo["g"], y, F))


def ricci_curvature(spec: FinslerMetricSpec, x, y) -> float:
    """Ric(y) = sum of K(y; e_i) over a g_y-orthonormal frame transverse to y (0-homogeneous)."""
    y = np.asarray(y, float)
    return _ricci_from(_geometry(spec, x, y), y)


def distortion(spec: FinslerMetricSpec, measure: MeasureSpec, x, y) -> float:
    """tau(x, y) = ln(sqrt(det g(x, y)) / sigma(x))."""
    geo = _geometry(spec, x, np.asarray(y, float))
    sigma = bh_density(spec, measure, x)
    if not sigma > 0:
        raise InputError("measure density must be positive")
    sign, logdet = np.linalg.slogdet(geo["g"])
    return 0.5 * logdet - math.log(sigma)


def _s_from(geo, spec, measure, x, y):
    return float(np.trace(geo["Gy"])) - float(y @ grad_log_density(spec, measure, x))


def s_curvature(spec: FinslerMetricSpec, measure: MeasureSpec, x, y) -> float:
    """S(x, y) = dG^m/dy^m - y^k d(ln sigma)/dx^k."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    return _s_from(_geometry(spec, x, y), spec, measure, x, y)


def geodesic_flow(spec: FinslerMetricSpec, x, v, t: float, max_step: float = 1e-5):
    """Position and velocity after signed time t along x'' = -2 G(x, x')."""
    nsub = max(1, int(math.ceil(abs(t) / max_step)))
    run = jitted(spec, "rk4", lambda: _rk4_builder(spec))
    xe, ve = run(jnp.asarray(x, dtype=float), jnp.asarray(v, dtype=float), t / nsub, nsub)
    return np.asarray(xe), np.asarray(ve)


def s_derivative(spec, measure, x, y, step: float = 1e-4) -> float:
    """d/dt S(gamma(t), gamma'(t)) at t = 0 by a Richardson-extrapolated central difference."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)

    def S_at(t):
        xt, vt = geodesic_flow(spec, x, y, t)
        return s_curvature(spec, measure, xt, vt)

    d1 = (S_at(step) - S_at(-step)) / (2 * step)
    d2 = (S_at(step / 2) - S_at(-step / 2)) / step
    return (4 * d2 - d1) / 3


def weighted_ricci(spec: FinslerMetricSpec, measure: MeasureSpec, x, y, N, *,
                   _cache: dict | None = None) -> float:
    """Ric_N(y) = Ric(y) + dS/dt - S^2 / (N - n) for a unit vector y.

    N = inf drops the last term.  At N = n the value is -inf whenever S(y) != 0.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = spec.dim
    if not (N == math.inf or N >= n):
        raise InputError(f"weighted Ricci needs N >= n = {n}")
    F = metric_eval(spec, x, y)
    if abs(F - 1.0) > 1e-10:
        raise InputError("weighted Ricci expects a unit vector, F(x, y) = 1")
    c = _cache if _cache is not None else {}
    if "ric" not in c:
        geo = _geometry(spec, x, y)
        c["ric"] = _ricci_from(geo, y)
        c["S"] = _s_from(geo, spec, measure, x, y)
        c["dS"] = s_derivative(spec, measure, x, y)
    ric, S, dS = c["ric"], c["S"], c["dS"]
    if N == math.inf:
        return ric + dS
    if N == n:
        return -math.inf if abs(S) > 1e-10 else ric + dS
    return ric + dS - S * S / (N - n)


def hilbert_weighted_ricci_closed(n: int, P: float, N) -> float:
    """Closed form 2 - (n+1) P^2 - (n+1)^2 P^2 / (N - n) for Hilbert metrics with Funk BH measure."""
    val = 2.0 - (n + 1) * P * P
    if N == math.inf:
        return val
    if N == n:
        return -math.inf if P != 0 else val
    return val - (n + 1) ** 2 * P * P / (N - n)


def hilbert_weighted_ricci_bound(n: int, N) -> float:
    """Lower bound -(n-1) - (n+1)^2 / (N - n) for unit vectors."""
    if N == math.inf:
        return -(n - 1.0)
    return -(n - 1.0) - (n + 1) ** 2 / (N - n)


def troyanov_ratio(spec, x, y) -> float:
    """(P^2 - y^k dP/dx^k) / F^2 for a Hilbert metric, P the projective factor."""
    P = jitted(spec, "hilbertP", lambda: lambda x, y: 0.5 * (spec.funk.jax_F(x, y) - spec.funk.jax_F(x, -y)))
    dP = jitted(spec, "hilbertdP", lambda: jax.grad(lambda x, y: 0.5 * (spec.funk.jax_F(x, y)
                                                                       - spec.funk.jax_F(x, -y)), 0))
    xj, yj = jnp.asarray(x, dtype=float), jnp.asarray(y, dtype=float)
    p = float(P(xj, yj))
    F = metric_eval(spec, x, y)
    return (p * p - float(np.asarray(dP(xj, yj)) @ np.asarray(y, float))) / (F * F)


# ---------------------------------------------------------------- report


@dataclass
class CurvatureReport:
    x: np.ndarray
    y: np.ndarray
    v: np.ndarray
    flag: float
    ricci: float
    distortion: float
    s_curvature: float
    weighted_ricci: dict = field(default_factory=dict)

    def header(self, Ns=None):
        n = len(self.x)
        Ns = list(self.weighted_ricci) if Ns is None else Ns
        cols = [f"x{i}" for i in range(n)] + [f"y{i}" for i in range(n)] + [f"v{i}" for i in range(n)]
        cols += ["flag", "ricci", "distortion", "s"] + [f"ric_N@{_fmtN(N)}" for N in Ns]
        return cols

    def row(self):
        return (list(self.x) + list(self.y) + list(self.v)
                + [self.flag, self.ricci, self.distortion, self.s_curvature]
                + list(self.weighted_ricci.values()))


def _fmtN(N):
    return "inf" if N == math.inf else f"{N:g}"


def curvature_report(spec: FinslerMetricSpec, measure: MeasureSpec, x, y, v, Ns=(math.inf,)) -> CurvatureReport:
    """Every curvature quantity at the flag (x, y, v); y is normalised to F = 1 first."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    y = y / metric_eval(spec, x, y)
    v = np.asarray(v, float)
    geo = _geometry(spec, x, y)
    cache = {"ric": _ricci_from(geo, y), "S": _s_from(geo, spec, measure, x, y)}
    cache["dS"] = s_derivative(spec, measure, x, y) if Ns else 0.0
    sigma = bh_density(spec, measure, x)
    tau = 0.5 * np.linalg.slogdet(geo["g"])[1] - math.log(sigma)
    wr = {N: weighted_ricci(spec, measure, x, y, N, _cache=cache) for N in Ns}
    return CurvatureReport(x, y, v, _flag_from(geo, y, v), cache["ric"], float(tau), cache["S"], wr)
