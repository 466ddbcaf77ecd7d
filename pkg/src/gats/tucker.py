"""HOSVD / HOOI Tucker decomposition and multilinear reconstruction."""
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .linalg import truncated_svd
from .tensor import as_tensor, frobenius_norm, mode_product, unfold

HOOI_MAX_ITER = 25
HOOI_TOL = 1e-8
# Relative errors below this are roundoff; further sweeps cannot help.
ROUNDOFF = 1e-13


@dataclass
class TuckerFactors:
    """``X ~= core x_1 U_1 x_2 U_2 ... x_d U_d``.

    ``history`` holds the relative reconstruction error after initialization
    (entry 0) and after every HOOI sweep; empty for plain HOSVD.
    """

    core: np.ndarray
    factors: list
    history: list = field(default_factory=list)

    def __post_init__(self):
        if self.core.ndim != len(self.factors):
            raise ShapeError(f"core has {self.core.ndim} modes but {len(self.factors)} factors given")
        for k, U in enumerate(self.factors):
            if U.ndim != 2 or U.shape[1] != self.core.shape[k]:
                raise ShapeError(f"factor {k + 1} has shape {U.shape}, core mode size {self.core.shape[k]}")

    @property
    def ranks(self):
        return tuple(self.core.shape)

    @property
    def dims(self):
        return tuple(U.shape[0] for U in self.factors)


def _check_ranks(dims, ranks):
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != len(dims):
        raise ShapeError(f"need {len(dims)} ranks, got {len(ranks)}")
    for k, (n, r) in enumerate(zip(dims, ranks), start=1):
        if not 1 <= r <= n:
            raise ShapeError(f"rank {r} for mode {k} out of range 1..{n}")
    return ranks


def _project(X, factors, skip=None):
    out = X
    for k, U in enumerate(factors, start=1):
        if k != skip:
            out = mode_product(out, U.T, k)
    return out


def tucker_reconstruct(F):
    out = F.core
    for k, U in enumerate(F.factors, start=1):
        out = mode_product(out, U, k)
    return out


def _rel_error(X, F, xnorm):
    return frobenius_norm(X - tucker_reconstruct(F)) / xnorm if xnorm > 0 else 0.0


def hosvd(X, ranks):
    """Truncated higher-order SVD."""
    X = as_tensor(X)
    ranks = _check_ranks(X.shape, ranks)
    factors = [truncated_svd(unfold(X, k), r).U for k, r in enumerate(ranks, start=1)]
    return TuckerFactors(_project(X, factors), factors)


def hooi(X, ranks, max_iter=HOOI_MAX_ITER, tol=HOOI_TOL):
    """Higher-order orthogonal iteration started from :func:`hosvd`.

    Each sweep replaces ``U_k`` by the top-``r_k`` left singular vectors of
    the mode-``k`` unfolding of ``X`` contracted with all other ``U_j^T``.
    Stops once the relative error improves by less than ``tol`` (relative)
    or after ``max_iter`` sweeps.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    X = as_tensor(X)
    ranks = _check_ranks(X.shape, ranks)
    xnorm = frobenius_norm(X)
    F = hosvd(X, ranks)
    best = F
    history = [_rel_error(X, F, xnorm)]
    factors = list(F.factors)
    for _ in range(max_iter):
        for k, r in enumerate(ranks, start=1):
            partial = _project(X, factors, skip=k)
            factors[k - 1] = truncated_svd(unfold(partial, k), r).U
        cand = TuckerFactors(_project(X, factors), list(factors))
        err = _rel_error(X, cand, xnorm)
        prev = history[-1]
        if err <= _rel_error(X, best, xnorm):
            best = cand
        history.append(err)
        if err <= ROUNDOFF or prev == 0.0 or (prev - err) / prev < tol:
            break
    best.history = history
    return best
