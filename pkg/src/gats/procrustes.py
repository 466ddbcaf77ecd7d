"""Orthogonal Procrustes alignment of subspace frames.

``op_align(V, V0)`` picks the orthonormal frame of ``span(V)`` closest to the
anchor ``V0`` in Frobenius norm.  It is unique exactly when
``V0^T V V^T V0`` is positive definite; outside that set we raise
:class:`~gats.errors.OverlapViolation` instead of returning one of many
minimizers.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefinite, OverlapViolation, ShapeError
from .linalg import haar_stiefel, pd_floor, spd_inv_sqrt, svd, sym_eig
from .rng import Stream
from .tensor import as_matrix


@dataclass(frozen=True)
class AlignmentResult:
    aligned: np.ndarray
    rotation: np.ndarray
    overlap_min_eig: float
    sq_distance: float


def op_solve(A, B):
    """Orthogonal ``Q`` minimizing ``||A Q - B||_F``: ``L R^T`` for ``A^T B = L Lambda R^T``."""
    A = as_matrix(A)
    B = as_matrix(B)
    if A.shape != B.shape:
        raise ShapeError(f"Procrustes needs equal shapes, got {A.shape} and {B.shape}")
    res = svd(A.T @ B)
    return res.U @ res.V.T


def overlap_matrix(V, V0):
    """``V0^T V V^T V0``; symmetrized."""
    C = V0.T @ V
    G = C @ C.T
    return 0.5 * (G + G.T)


def overlap_min_eig(V, V0):
    return float(sym_eig(overlap_matrix(V, V0))[0][-1])


def op_align(V, V0, mode=None, sample=None):
    """Align ``V`` to ``V0`` within its span (SVD route)."""
    V = as_matrix(V)
    V0 = as_matrix(V0)
    if V.shape != V0.shape:
        raise ShapeError(f"frame {V.shape} and anchor {V0.shape} differ in shape")
    G = overlap_matrix(V, V0)
    lam = float(sym_eig(G)[0][-1])
    floor = pd_floor(G)
    if lam <= floor:
        raise OverlapViolation(lam, floor, mode=mode, sample=sample)
    Q = op_solve(V, V0)
    aligned = V @ Q
    d = V0 - aligned
    return AlignmentResult(aligned, Q, lam, float(np.sum(d * d)))


def op_align_closed_form(V, V0):
    """``V V^T V0 (V0^T V V^T V0)^{-1/2}``, the second route to :func:`op_align`."""
    V = as_matrix(V)
    V0 = as_matrix(V0)
    try:
        T = spd_inv_sqrt(overlap_matrix(V, V0))
    except NotPositiveDefinite as exc:
        raise OverlapViolation(exc.min_eig, exc.floor) from None
    return V @ (V.T @ V0) @ T


def nuclear_norm(M, method="lapack"):
    return float(np.sum(svd(M, method=method).S))


def aligned_sq_distance(V, V0):
    """``min_Q ||V0 - V Q||_F^2 = 2r - 2 ||V0^T V||_*`` for orthonormal frames."""
    return 2.0 * V.shape[1] - 2.0 * nuclear_norm(V0.T @ V)


_EDGE = 1e-14


def ell(c):
    """Asymptotic fraction of ``2r`` removed by alignment of Haar frames, ``c = p / r``."""
    c = float(c)
    if not c >= 1.0:
        raise ValueError(f"ell(c) needs c >= 1, got {c}")
    b = 4.0 * (c - 1.0) / (c * c)
    if b < _EDGE:
        first = 0.0
    else:
        one_minus = 1.0 - b
        if one_minus < _EDGE:
            tail = 0.0
        else:
            tail = math.sqrt(one_minus) * math.atan(math.sqrt(b / one_minus))
        first = c / math.pi * (math.sqrt(b) - tail)
    return first + max(2.0 - c, 0.0)


def _trial(p, r, seed, i):
    rs = Stream(seed, "prop2", i)
    V0 = haar_stiefel(p, r, rs)
    V = haar_stiefel(p, r, rs)
    return 1.0 - nuclear_norm(V0.T @ V) / r


def mc_aligned_distance(p, r, trials, seed=0, threads=1):
    """Monte Carlo mean and standard error of ``||V0 - V Q*||_F^2 / (2r)``.

    Trial ``i`` draws its pair from stream ``(seed, "prop2", i)`` and results
    are reduced in trial order, so the output does not depend on ``threads``.
    """
    if r >= p:
        raise ShapeError(f"need r < p, got p={p}, r={r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            vals = list(pool.map(lambda i: _trial(p, r, seed, i), range(trials)))
    else:
        vals = [_trial(p, r, seed, i) for i in range(trials)]
    vals = np.array(vals)
    mean = float(math.fsum(vals) / trials)
    se = float(np.std(vals, ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return mean, se
