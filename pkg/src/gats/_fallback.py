"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and the same floating-point operation order, so either
backend can stand in for the other.
"""
import numpy as np


def rd_integrate(u0, nu, rho, dx, dt, n_sub, nt):
    u = np.array(u0, dtype=np.float64, copy=True)
    nx = u.shape[0]
    lam = nu * dt / (dx * dx)
    rdt = rho * dt
    out = np.empty((nx, nt), dtype=np.float64)
    out[:, 0] = u
    for j in range(1, nt):
        for _ in range(n_sub):
            lap = np.roll(u, 1) - 2.0 * u + np.roll(u, -1)
            u = u + lam * lap + rdt * u * (1.0 - u)
        out[:, j] = u
    return out


def jacobi_svd(a, tol, max_sweeps):
    w = np.array(a, dtype=np.float64, copy=True)
    n = w.shape[1]
    v = np.eye(n)
    sweep = 0
    rotated = True
    while rotated and sweep < max_sweeps:
        rotated = False
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                wp, wq = w[:, p], w[:, q]
                alpha = float(np.sum(wp * wp))
                beta = float(np.sum(wq * wq))
                gamma = float(np.sum(wp * wq))
                if gamma == 0.0 or abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + np.sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                x, y = wp.copy(), wq.copy()
                w[:, p] = c * x - s * y
                w[:, q] = s * x + c * y
                x, y = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * x - s * y
                v[:, q] = s * x + c * y
    return w, v, sweep
