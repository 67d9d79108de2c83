# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch ray-exit solver for the built-in norm families.

For each row solves phi(x + s y) = 1 for s > 0 by bracket doubling and
safeguarded Newton.  Norm codes: 0 Euclidean, 1 power sum, 2 quartic split,
3 ellipsoid.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow, INFINITY, NAN

cnp.import_array()


cdef double _phi(int code, const double* z, int n, const double* prm, double* g) noexcept nogil:
    """phi(z); writes grad phi(z) into g when g is not NULL."""
    cdef int i, n1
    cdef double s = 0.0, a2 = 0.0, b2 = 0.0, mx = 0.0, t, f, root, p
    if code == 0:
        for i in range(n):
            s += z[i] * z[i]
        f = sqrt(s)
        if g != NULL:
            for i in range(n):
                g[i] = z[i] / f
        return f
    elif code == 1:
        p = 2.0 * prm[0]
        for i in range(n):
            if fabs(z[i]) > mx:
                mx = fabs(z[i])
        if mx == 0.0:
            return 0.0
        for i in range(n):
            s += pow(z[i] / mx, p)
        f = mx * pow(s, 1.0 / p)
        if g != NULL:
            for i in range(n):
                g[i] = pow(z[i] / f, p - 1.0)
        return f
    elif code == 2:
        n1 = <int>prm[0]
        for i in range(n1):
            a2 += z[i] * z[i]
        for i in range(n1, n):
            b2 += z[i] * z[i]
        root = sqrt(a2 * a2 + b2 * b2)
        f = sqrt(root + a2 + b2)
        if g != NULL:
            for i in range(n1):
                g[i] = z[i] * (2.0 * a2 / root + 2.0) / (2.0 * f)
            for i in range(n1, n):
                g[i] = z[i] * (2.0 * b2 / root + 2.0) / (2.0 * f)
        return f
    else:
        for i in range(n):
            t = z[i] / prm[i]
            s += t * t
        f = sqrt(s)
        if g != NULL:
            for i in range(n):
                g[i] = z[i] / (prm[i] * prm[i] * f)
        return f


def ray_exit(int code, double[::1] prm, double[:, ::1] x, double[:, ::1] y,
             double tol=1e-14, int maxit=200):
    """Return s* per row (inf where y = 0, nan where x is not interior)."""
    cdef Py_ssize_t m = x.shape[0], k
    cdef int n = <int>x.shape[1], i, it
    cdef double[::1] out = np.empty(m)
    cdef double[::1] z = np.empty(n)
    cdef double[::1] g = np.empty(n)
    cdef double lo, hi, s, val, dv, snew, py
    with nogil:
        for k in range(m):
            if _phi(code, &x[k, 0], n, &prm[0], NULL) >= 1.0:
                out[k] = NAN
                continue
            py = _phi(code, &y[k, 0], n, &prm[0], NULL)
            if py == 0.0:
                out[k] = INFINITY
                continue
            lo = 0.0
            hi = 1.0 / py
            for it in range(2100):
                for i in range(n):
                    z[i] = x[k, i] + hi * y[k, i]
                if _phi(code, &z[0], n, &prm[0], NULL) >= 1.0:
                    break
                lo = hi
                hi = 2.0 * hi
            s = hi
            for it in range(maxit):
                for i in range(n):
                    z[i] = x[k, i] + s * y[k, i]
                val = _phi(code, &z[0], n, &prm[0], &g[0]) - 1.0
                if val > 0.0:
                    hi = s
                else:
                    lo = s
                if fabs(val) <= tol:
                    break
                dv = 0.0
                for i in range(n):
                    dv += g[i] * y[k, i]
                snew = s - val / dv if dv > 0.0 else 0.5 * (lo + hi)
                if not (snew > lo and snew < hi):
                    snew = 0.5 * (lo + hi)
                if fabs(snew - s) <= 1e-16 * s:
                    s = snew
                    break
                s = snew
            out[k] = s
    return np.asarray(out)


def norm_values(int code, double[::1] prm, double[:, ::1] y):
    """phi along rows."""
    cdef Py_ssize_t m = y.shape[0], k
    cdef int n = <int>y.shape[1]
    cdef double[::1] out = np.empty(m)
    with nogil:
        for k in range(m):
            out[k] = _phi(code, &y[k, 0], n, &prm[0], NULL)
    return np.asarray(out)
