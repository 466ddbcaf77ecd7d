"""Error metrics, classical MDS and 1-d distribution diagnostics."""
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ShapeError
from .tensor import rel_err_l2


@dataclass(frozen=True)
class ErrorReport:
    rel_err_l1: float
    rel_err_l2: float
    rmse: float
    psnr: float | None = None
    avg_rmse: float | None = None

    def to_json(self):
        d = asdict(self)
        if d["psnr"] is not None and math.isinf(d["psnr"]):
            d["psnr"] = "inf"
        return d


def rmse(X, X_hat):
    d = np.asarray(X, dtype=np.float64) - np.asarray(X_hat, dtype=np.float64)
    return float(np.sqrt(np.mean(d * d)))


def psnr(X, X_hat, value_range):
    e = rmse(X, X_hat)
    if e == 0.0:
        return math.inf
    return 20.0 * math.log10(value_range / e)


def error_report(X, X_hat, time_mode=None, value_range=None):
    """Relative l1/l2 errors, RMSE, optional PSNR and per-frame average RMSE.

    ``time_mode`` is 1-based; ``value_range`` must be given for PSNR.
    """
    X = np.asarray(X, dtype=np.float64)
    X_hat = np.asarray(X_hat, dtype=np.float64)
    if X.shape != X_hat.shape:
        raise ShapeError(f"shape mismatch {X.shape} vs {X_hat.shape}")
    ref1 = float(np.sum(np.abs(X)))
    if ref1 == 0.0:
        raise ZeroDivisionError("reference tensor has zero norm")
    l1 = float(np.sum(np.abs(X - X_hat))) / ref1
    l2 = rel_err_l2(X, X_hat)
    avg = None
    if time_mode is not None:
        ax = int(time_mode) - 1
        Xt = np.moveaxis(X, ax, 0)
        Ht = np.moveaxis(X_hat, ax, 0)
        avg = float(np.mean([rmse(a, b) for a, b in zip(Xt, Ht)]))
    ps = psnr(X, X_hat, value_range) if value_range is not None else None
    return ErrorReport(l1, l2, rmse(X, X_hat), ps, avg)


def classical_mds(D, out_dim=2):
    """Torgerson MDS: top eigenpairs of ``-1/2 J (D*D) J``."""
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ShapeError(f"distance matrix must be square, got {D.shape}")
    scale = max(float(np.max(np.abs(D))), 1.0)
    if np.max(np.abs(D - D.T)) > 1e-10 * scale:
        raise ValueError("distance matrix is not symmetric")
    N = D.shape[0]
    J = np.eye(N) - 1.0 / N
    B = -0.5 * J @ (D * D) @ J
    B = 0.5 * (B + B.T)
    w, Q = np.linalg.eigh(B)
    w, Q = w[::-1][:out_dim], Q[:, ::-1][:, :out_dim]
    if np.any(w < -1e-9 * max(abs(w[0]), 1.0)):
        warnings.warn("distance matrix is not Euclidean; clamping negative eigenvalues to zero", stacklevel=2)
    w = np.clip(w, 0.0, None)
    X = Q * np.sqrt(w)
    if X.shape[1] < out_dim:
        X = np.hstack([X, np.zeros((N, out_dim - X.shape[1]))])
    return X


def silverman_bandwidth(samples):
    x = np.asarray(samples, dtype=np.float64)
    sd = np.std(x, ddof=1) if x.size > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    if spread <= 0:
        spread = 1.0
    return 0.9 * spread * x.size ** (-0.2)


def kde_1d(samples, grid, bandwidth=None):
    """Gaussian kernel density estimate evaluated on ``grid``."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    g = np.asarray(grid, dtype=np.float64)
    out = np.zeros(g.shape)
    step = max(1, (1 << 22) // max(g.size, 1))
    for s in range(0, x.size, step):
        z = (g[..., None] - x[s:s + step]) / h
        out += np.exp(-0.5 * z * z).sum(axis=-1)
    return out / (x.size * h * math.sqrt(2.0 * math.pi))


def wasserstein_1d(a, b):
    """Exact W1 between two empirical measures: ``int |F_a - F_b| dx``."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    allv = np.concatenate([a, b])
    allv.sort(kind="mergesort")
    deltas = np.diff(allv)
    Fa = np.searchsorted(a, allv[:-1], side="right") / a.size
    Fb = np.searchsorted(b, allv[:-1], side="right") / b.size
    return float(np.sum(np.abs(Fa - Fb) * deltas))


def mode_fractions(x, centers, half_width):
    """Fraction of ``x`` within ``half_width`` of each center."""
    x = np.asarray(x, dtype=np.float64)
    return [float(np.mean(np.abs(x - c) <= half_width)) for c in centers]
