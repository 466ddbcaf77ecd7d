# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Both routines mirror :mod:`gats._fallback` operation-for-operation so the two
backends agree to rounding.  No fast-math: results must stay reproducible.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


def rd_integrate(double[::1] u0, double nu, double rho, double dx, double dt,
                 Py_ssize_t n_sub, Py_ssize_t nt):
    """Forward-Euler / central-difference reaction-diffusion on a periodic grid.

    Returns an ``(nx, nt)`` array whose column ``j`` is the state after
    ``j * n_sub`` steps.
    """
    cdef Py_ssize_t nx = u0.shape[0]
    cdef Py_ssize_t i, j, s
    cdef double lam = nu * dt / (dx * dx)
    cdef double rdt = rho * dt
    cdef double c, lap
    out_arr = np.empty((nx, nt), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] u = np.array(u0, dtype=np.float64, copy=True)
    cdef double[::1] w = np.empty(nx, dtype=np.float64)
    cdef double[::1] tmp

    for i in range(nx):
        out[i, 0] = u[i]
    for j in range(1, nt):
        for s in range(n_sub):
            c = u[0]
            lap = u[nx - 1] - 2.0 * c + u[1 % nx]
            w[0] = c + lam * lap + rdt * c * (1.0 - c)
            for i in range(1, nx - 1):
                c = u[i]
                lap = u[i - 1] - 2.0 * c + u[i + 1]
                w[i] = c + lam * lap + rdt * c * (1.0 - c)
            if nx > 1:
                c = u[nx - 1]
                lap = u[nx - 2] - 2.0 * c + u[0]
                w[nx - 1] = c + lam * lap + rdt * c * (1.0 - c)
            tmp = u
            u = w
            w = tmp
        for i in range(nx):
            out[i, j] = u[i]
    return out_arr


def jacobi_svd(double[:, ::1] a, double tol, Py_ssize_t max_sweeps):
    """One-sided (Hestenes) Jacobi on the columns of ``a`` (m >= n).

    Returns ``(W, V, sweeps)`` with ``a @ V == W``; the column norms of ``W``
    are the singular values.  Columns are left unsorted.
    """
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    cdef Py_ssize_t p, q, i, sweep
    cdef double alpha, beta, gamma, zeta, t, c, s, x, y
    cdef bint rotated = True
    w_arr = np.array(a, dtype=np.float64, copy=True)
    v_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] w = w_arr
    cdef double[:, ::1] v = v_arr

    sweep = 0
    while rotated and sweep < max_sweeps:
        rotated = False
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(m):
                    alpha += w[i, p] * w[i, p]
                    beta += w[i, q] * w[i, q]
                    gamma += w[i, p] * w[i, q]
                if gamma == 0.0 or fabs(gamma) <= tol * sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = c * t
                for i in range(m):
                    x = w[i, p]
                    y = w[i, q]
                    w[i, p] = c * x - s * y
                    w[i, q] = s * x + c * y
                for i in range(n):
                    x = v[i, p]
                    y = v[i, q]
                    v[i, p] = c * x - s * y
                    v[i, q] = s * x + c * y
    return w_arr, v_arr, sweep
