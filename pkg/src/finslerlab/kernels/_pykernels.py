"""Pure numpy implementation of the ray-exit solver; same algorithm as the compiled one.

Also the only path for custom norms, which have no compiled representation.
"""
import numpy as np


def ray_exit(norm, x, y, tol=1e-14, maxit=200):
    """Return s* with phi(x + s* y) = 1 per row (inf where y = 0, nan where x is not interior)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    m = x.shape[0]
    out = np.full(m, np.nan)
    py = norm.value(y)
    inside = norm.value(x) < 1.0
    zero = py == 0.0
    out[inside & zero] = np.inf
    act = np.flatnonzero(inside & ~zero)
    if act.size == 0:
        return out
    xa, ya = x[act], y[act]
    lo = np.zeros(act.size)
    hi = 1.0 / py[act]
    for _ in range(2100):
        below = norm.value(xa + hi[:, None] * ya) < 1.0
        if not below.any():
            break
        lo = np.where(below, hi, lo)
        hi = np.where(below, 2 * hi, hi)
    s = hi.copy()
    live = np.ones(act.size, bool)
    for _ in range(maxit):
        idx = np.flatnonzero(live)
        if idx.size == 0:
            break
        z = xa[idx] + s[idx, None] * ya[idx]
        val = norm.value(z) - 1.0
        dv = np.sum(norm.grad(z) * ya[idx], axis=-1)
        hi[idx] = np.where(val > 0, s[idx], hi[idx])
        lo[idx] = np.where(val > 0, lo[idx], s[idx])
        conv = np.abs(val) <= tol
        with np.errstate(divide="ignore", invalid="ignore"):
            snew = np.where(dv > 0, s[idx] - val / dv, 0.5 * (lo[idx] + hi[idx]))
        bad = ~((snew > lo[idx]) & (snew < hi[idx]))
        snew = np.where(bad, 0.5 * (lo[idx] + hi[idx]), snew)
        stall = np.abs(snew - s[idx]) <= 1e-16 * s[idx]
        s[idx] = np.where(conv, s[idx], snew)
        live[idx[conv | stall]] = False
    out[act] = s
    return out
