"""Minkowski norms on R^n: evaluation, gradients, dual norm, Legendre map, reversibility.

Every norm evaluates batches along the last axis and accepts either numpy or
jax.numpy as the array namespace ``xp``, so the same expression serves the
vectorised kernels and the automatic-differentiation path.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import optimize

from ._jax import jax, jnp
from .errors import DomainError, InputError, NumericError
from .quadrature import sphere_directions

EPS = np.finfo(float).eps

# codes understood by the compiled ray-exit kernel
KERNEL_EUCLIDEAN, KERNEL_POWERSUM, KERNEL_QUARTIC, KERNEL_ELLIPSOID, KERNEL_GENERIC = 0, 1, 2, 3, -1


class MinkowskiNorm:
    """Base class.  Subclasses implement :meth:`value` and usually :meth:`grad`.

    Instances are immutable and hashable so jitted derivative functions can be
    cached per norm.
    """

    dim: int
    kernel_code: int = KERNEL_GENERIC
    reversible: bool = False

    @property
    def kernel_params(self) -> np.ndarray:
        return np.zeros(1)

    def value(self, y, xp=np):
        raise NotImplementedError

    def grad(self, y):
        """Euclidean gradient of phi, numpy, batched along the last axis."""
        y = np.asarray(y, float)
        flat = y.reshape(-1, self.dim)
        return np.asarray(self._jax_grad(jnp.asarray(flat))).reshape(y.shape)

    @cached_property
    def _jax_grad(self):
        return jax.jit(jax.vmap(jax.grad(lambda v: self.value(v, jnp))))

    def dual_closed_form(self, xi):
        """Return phi*(xi) if a closed form exists, else None."""
        return None

    def __call__(self, y):
        return eval_norm(self, y)

    def _check(self, y):
        y = np.asarray(y, float)
        if y.shape[-1] != self.dim:
            raise InputError(f"vector of length {y.shape[-1]} given to a norm on R^{self.dim}")
        return y


@dataclass(frozen=True, eq=True)
class Euclidean(MinkowskiNorm):
    dim: int
    kernel_code = KERNEL_EUCLIDEAN
    reversible = True

    def value(self, y, xp=np):
        return xp.sqrt(xp.sum(y * y, axis=-1))

    def grad(self, y):
        y = np.asarray(y, float)
        r = np.linalg.norm(y, axis=-1, keepdims=True)
        return y / r

    def dual_closed_form(self, xi):
        return np.linalg.norm(xi, axis=-1)


@dataclass(frozen=True, eq=True)
class PowerSum(MinkowskiNorm):
    """phi(y) = (sum y_i^{2m})^{1/(2m)}."""

    dim: int
    m: int = 2
    kernel_code = KERNEL_POWERSUM
    reversible = True

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise InputError("PowerSum needs a positive integer m")

    @property
    def kernel_params(self):
        return np.array([float(self.m)])

    def value(self, y, xp=np):
        p = 2 * self.m
        # scale out the largest entry to avoid overflow of y^{2m}
        s = xp.max(xp.abs(y), axis=-1, keepdims=True)
        s = xp.where(s == 0, 1.0, s)
        return s[..., 0] * xp.sum((y / s) ** p, axis=-1) ** (1.0 / p)

    def grad(self, y):
        y = np.asarray(y, float)
        p = 2 * self.m
        f = self.value(y)[..., None]
        return (y / f) ** (p - 1)

    def dual_closed_form(self, xi):
        q = 2 * self.m / (2 * self.m - 1)
        return np.sum(np.abs(xi) ** q, axis=-1) ** (1.0 / q)


@dataclass(frozen=True, eq=True)
class QuarticSplit(MinkowskiNorm):
    """phi(y, w)^2 = sqrt(|y|^4 + |w|^4) + |y|^2 + |w|^2 on R^{n1} x R^{n2}."""

    n1: int
    n2: int
    kernel_code = KERNEL_QUARTIC
    reversible = True

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise InputError("QuarticSplit needs two positive block dimensions")

    @property
    def dim(self):
        return self.n1 + self.n2

    @property
    def kernel_params(self):
        return np.array([float(self.n1)])

    def value(self, y, xp=np):
        a2 = xp.sum(y[..., : self.n1] ** 2, axis=-1)
        b2 = xp.sum(y[..., self.n1:] ** 2, axis=-1)
        return xp.sqrt(xp.sqrt(a2 * a2 + b2 * b2) + a2 + b2)

    def grad(self, y):
        y = np.asarray(y, float)
        a2 = np.sum(y[..., : self.n1] ** 2, axis=-1, keepdims=True)
        b2 = np.sum(y[..., self.n1:] ** 2, axis=-1, keepdims=True)
        s = np.sqrt(a2 * a2 + b2 * b2)
        f = np.sqrt(s + a2 + b2)
        ga = y[..., : self.n1] * (2 * a2 / s + 2)
        gb = y[..., self.n1:] * (2 * b2 / s + 2)
        return np.concatenate([ga, gb], axis=-1) / (2 * f)


@dataclass(frozen=True, eq=True)
class Ellipsoid(MinkowskiNorm):
    """phi(y) = sqrt(sum (y_i / a_i)^2); the unit ball has semi-axes ``axes``."""

    axes: tuple
    kernel_code = KERNEL_ELLIPSOID
    reversible = True

    def __post_init__(self):
        ax = tuple(float(a) for a in self.axes)
        if not ax or min(ax) <= 0:
            raise InputError("Ellipsoid axes must be positive")
        object.__setattr__(self, "axes", ax)

    @property
    def dim(self):
        return len(self.axes)

    @property
    def kernel_params(self):
        return np.asarray(self.axes)

    def value(self, y, xp=np):
        a = xp.asarray(self.axes)
        return xp.sqrt(xp.sum((y / a) ** 2, axis=-1))

    def grad(self, y):
        y = np.asarray(y, float)
        a = np.asarray(self.axes)
        return (y / a ** 2) / self.value(y)[..., None]

    def dual_closed_form(self, xi):
        return np.sqrt(np.sum((np.asarray(xi) * np.asarray(self.axes)) ** 2, axis=-1))


@dataclass(frozen=True, eq=False)
class CustomNorm(MinkowskiNorm):
    """User norm given by ``func(y, xp)`` evaluated along the last axis.

    The function must be written with the supplied namespace so that it can be
    traced by jax.  Convexity and positivity are the caller's responsibility.
    """

    dim: int
    func: Callable = field(repr=False)
    name: str = "custom"

    def value(self, y, xp=np):
        return self.func(y, xp)

    def __hash__(self):
        return id(self)


# ---------------------------------------------------------------- operations


def eval_norm(norm: MinkowskiNorm, y):
    """phi(y).  Scalars for a single vector, arrays for a batch."""
    y = norm._check(y)
    v = norm.value(y)
    return float(v) if np.ndim(v) == 0 else np.asarray(v)


def legendre_transform(norm: MinkowskiNorm, y):
    """L(y) = gradient of phi^2/2 = phi(y) * grad phi(y); L(0) = 0."""
    y = norm._check(y)
    out = np.zeros_like(y)
    nz = np.any(y != 0, axis=-1)
    if np.ndim(y) == 1:
        if nz:
            out = norm.value(y) * norm.grad(y)
        return out
    out[nz] = norm.value(y[nz])[:, None] * norm.grad(y[nz])
    return out


def sup_on_sphere(ratio, n: int, budget: int = 4096, refine: int = 4, seed: int = 0):
    """Maximise a 0-homogeneous vectorised ``ratio`` over S^{n-1}.

    Deterministic low-discrepancy sampling followed by quasi-Newton polishing
    of the best few samples (the objective is 0-homogeneous, so the ascent runs
    on the unnormalised vector).  Returns (value, argmax).
    """
    dirs = sphere_directions(n, budget, seed)
    vals = np.asarray(ratio(dirs), float)
    top = np.argsort(vals)[::-1][:refine]
    best_v, best_y = -np.inf, None
    for i in top:
        res = optimize.minimize(
            lambda v: -float(ratio(v[None, :] / np.linalg.norm(v))[0]),
            dirs[i],
            method="BFGS",
            options={"gtol": 1e-11, "maxiter": 200 * n},
        )
        v = -res.fun
        if v > best_v:
            best_v, best_y = v, res.x / np.linalg.norm(res.x)
    if vals[top[0]] > best_v:
        best_v, best_y = float(vals[top[0]]), dirs[top[0]]
    return float(best_v), best_y


def _dual_generic(norm: MinkowskiNorm, xi: np.ndarray, tol: float = 1e-10):
    """phi*(xi) = max <y, xi> / phi(y), multi-start from axes and 64 QMC points."""
    n = norm.dim
    xin = np.linalg.norm(xi)
    if xin == 0:
        return 0.0
    u = xi / xin

    def h(v):
        return -float(v @ u) / float(norm.value(v))

    def dh(v):
        f = float(norm.value(v))
        return -(u / f - float(v @ u) * norm.grad(v) / f ** 2)

    starts = np.vstack([np.eye(n), -np.eye(n), sphere_directions(n, 64, seed=1)])
    vals = np.array([h(s) for s in starts])
    best, best_res = np.inf, np.inf
    for i in np.argsort(vals)[:3]:
        r = optimize.minimize(h, starts[i], jac=dh, method="BFGS", options={"gtol": 1e-13})
        v = r.x / np.linalg.norm(r.x)
        # residual: tangential gradient at the normalised maximiser
        g = dh(v)
        res = np.linalg.norm(g - (g @ v) * v)
        if r.fun < best:
            best, best_res = r.fun, res
    if best_res > 1e3 * tol:
        raise NumericError("dual-norm maximisation did not converge", residual=best_res)
    return -best * xin


def dual_norm(norm: MinkowskiNorm, xi, *, generic: bool = False):
    """phi*(xi) = sup_{phi(y)=1} <y, xi>.

    Closed forms are used where available unless ``generic`` is set.
    """
    xi = norm._check(xi)
    if not generic:
        c = norm.dual_closed_form(xi)
        if c is not None:
            return float(c) if np.ndim(c) == 0 else np.asarray(c)
    if xi.ndim == 1:
        return _dual_generic(norm, xi)
    return np.array([_dual_generic(norm, v) for v in xi.reshape(-1, norm.dim)]).reshape(xi.shape[:-1])


def norm_reversibility(norm: MinkowskiNorm, budget: int = 4096) -> float:
    """lambda_phi = sup phi(-y) / phi(y) over the unit sphere; always >= 1."""
    if norm.reversible:
        return 1.0
    val, _ = sup_on_sphere(lambda v: norm.value(-v) / norm.value(v), norm.dim, budget)
    return max(val, 1.0)


# ---------------------------------------------------------------- fundamental tensor


def _half_sq_fn(metric):
    """(x, y) -> F(x, y)^2 / 2 in jax, for a metric or a bare norm."""
    if isinstance(metric, MinkowskiNorm):
        return lambda x, y: 0.5 * metric.value(y, jnp) ** 2
    return lambda x, y: 0.5 * metric.jax_F(x, y) ** 2


def _np_value_fn(metric):
    if isinstance(metric, MinkowskiNorm):
        return lambda x, y: metric.value(y)
    return lambda x, y: metric.value(x, y)


_HESS_CACHE: dict = {}


def _jit_hessian(metric):
    key = metric
    fn = _HESS_CACHE.get(key)
    if fn is None:
        fn = jax.jit(jax.jacfwd(jax.jacfwd(_half_sq_fn(metric), 1), 1))
        _HESS_CACHE[key] = fn
    return fn


def fd_hessian_y(fun, x, y, step=None):
    """Central-difference Hessian in y of the scalar ``fun(x, y)``."""
    y = np.asarray(y, float)
    n = y.size
    h = step if step is not None else EPS ** (1 / 3) * max(1.0, np.linalg.norm(y))
    E = np.eye(n) * h
    H = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            v = (fun(x, y + E[i] + E[j]) - fun(x, y + E[i] - E[j])
                 - fun(x, y - E[i] + E[j]) + fun(x, y - E[i] - E[j])) / (4 * h * h)
            H[i, j] = H[j, i] = v
    return H


def fundamental_tensor(metric, x, y, method: str = "ad"):
    """g_ij(x, y) = (1/2) d^2 F^2 / dy^i dy^j.

    ``metric`` is a :class:`MinkowskiNorm` (x ignored) or a metric from
    :mod:`finslerlab.metrics`.  ``method`` is ``"ad"`` (nested forward mode) or
    ``"fd"`` (central differences, step eps^(1/3) max(1, |y|)).
    """
    y = np.asarray(y, float)
    n = metric.dim
    if y.shape != (n,):
        raise InputError(f"y must have shape ({n},)")
    x = np.zeros(n) if x is None else np.asarray(x, float)
    if not np.any(y):
        raise DomainError("the fundamental tensor is undefined at y = 0")
    if not isinstance(metric, MinkowskiNorm):
        metric.check_interior(x)
    if method == "ad":
        g = np.asarray(_jit_hessian(metric)(jnp.asarray(x), jnp.asarray(y)))
    elif method == "fd":
        val = _np_value_fn(metric)
        g = fd_hessian_y(lambda xx, yy: 0.5 * float(val(xx, yy)) ** 2, x, y)
    else:
        raise InputError(f"unknown differentiation method {method!r}")
    g = 0.5 * (g + g.T)
    if not np.all(np.isfinite(g)):
        raise NumericError("fundamental tensor has non-finite entries", x=x, y=y)
    w = np.linalg.eigvalsh(g)
    if w[0] <= 1e-12 * max(abs(w[-1]), 1.0):
        raise NumericError("fundamental tensor is not positive definite", eigenvalues=w)
    return g
