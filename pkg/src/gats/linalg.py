"""Dense factorizations: SVD (LAPACK and one-sided Jacobi), symmetric
eigendecomposition, SPD inverse square root and Haar-random Stiefel frames.

SVD outputs are sign-normalized so that the largest-magnitude entry of every
left singular vector is positive.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NotPositiveDefinite, ShapeError
from .rng import as_stream
from .tensor import as_matrix

STIEFEL_TOL = 1e-8
PD_REL_FLOOR = 1e-10


@dataclass(frozen=True)
class SvdResult:
    """``M ~= U @ diag(S) @ V.T`` with ``S`` descending."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    @property
    def rank(self):
        return self.S.shape[0]

    def reconstruct(self):
        return (self.U * self.S) @ self.V.T


def _sign_normalize(U, V):
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, V * signs


def svd(M, method="lapack"):
    """Thin SVD with ``q = min(m, n)``.

    ``method="jacobi"`` runs the one-sided Jacobi kernel instead of LAPACK;
    it is slower but computes small singular values to high relative accuracy.
    """
    M = as_matrix(M)
    if method == "lapack":
        U, S, Vt = np.linalg.svd(M, full_matrices=False)
        V = Vt.T
    elif method == "jacobi":
        U, S, V = _jacobi(M)
    else:
        raise ValueError(f"unknown svd method {method!r}")
    U, V = _sign_normalize(U, V)
    return SvdResult(U, S, V)


def _jacobi(M, tol=1e-15, max_sweeps=60):
    transposed = M.shape[0] < M.shape[1]
    A = np.ascontiguousarray(M.T if transposed else M)
    W, V, _ = kernels.jacobi_svd(A, tol, max_sweeps)
    S = np.linalg.norm(W, axis=0)
    order = np.argsort(-S, kind="stable")
    S, W, V = S[order], W[:, order], V[:, order]
    U = np.zeros_like(W)
    live = S > S[0] * 1e-300 if S.size and S[0] > 0 else np.zeros(S.shape, bool)
    U[:, live] = W[:, live] / S[live]
    if not live.all():
        U = _complete_orthonormal(U, live)
    if transposed:
        U, V = V, U
    return U, S, V


def _complete_orthonormal(U, live):
    """Fill the dead columns of ``U`` with an orthonormal complement."""
    m, q = U.shape
    basis = U[:, live]
    need = q - basis.shape[1]
    # Deterministic candidates: canonical basis vectors projected off the live span.
    extra = []
    for e in np.eye(m):
        x = e - basis @ (basis.T @ e)
        for y in extra:
            x -= y * (y @ x)
        nrm = np.linalg.norm(x)
        if nrm > 1e-8:
            extra.append(x / nrm)
        if len(extra) == need:
            break
    out = U.copy()
    out[:, ~live] = np.column_stack(extra)
    return out


def truncated_svd(M, r, method="lapack"):
    """Top-``r`` singular triplets (Eckart-Young optimal rank-``r`` approximation)."""
    M = as_matrix(M)
    q = min(M.shape)
    if not isinstance(r, (int, np.integer)) or not 1 <= r <= q:
        raise ShapeError(f"rank {r!r} out of range 1..{q}")
    full = svd(M, method=method)
    return SvdResult(
        np.ascontiguousarray(full.U[:, :r]),
        full.S[:r].copy(),
        np.ascontiguousarray(full.V[:, :r]),
    )


def sym_eig(S, sym_tol=1e-8):
    """Eigenvalues (descending) and orthonormal eigenvectors of a symmetric matrix."""
    S = as_matrix(S)
    if S.shape[0] != S.shape[1]:
        raise ShapeError(f"expected a square matrix, got {S.shape}")
    nrm = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > sym_tol * max(nrm, np.finfo(float).tiny):
        raise ValueError("matrix is not symmetric")
    w, Q = np.linalg.eigh(0.5 * (S + S.T))
    return w[::-1].copy(), np.ascontiguousarray(Q[:, ::-1])


def pd_floor(S):
    """Scale-invariant positive-definiteness floor ``1e-10 * trace(S) / r``."""
    return PD_REL_FLOOR * float(np.trace(S)) / S.shape[0]


def spd_inv_sqrt(S):
    """Symmetric ``T`` with ``T @ S @ T == I``.

    Raises :class:`NotPositiveDefinite` when the smallest eigenvalue is at or
    below :func:`pd_floor`.
    """
    w, Q = sym_eig(S)
    floor = pd_floor(S)
    if w[-1] <= floor:
        raise NotPositiveDefinite(w[-1], floor)
    T = (Q / np.sqrt(w)) @ Q.T
    return 0.5 * (T + T.T)


def spd_sqrt(S):
    w, Q = sym_eig(S)
    T = (Q * np.sqrt(np.clip(w, 0.0, None))) @ Q.T
    return 0.5 * (T + T.T)


def check_stiefel(V, tol=STIEFEL_TOL):
    """Return ``V`` as an array after checking ``||V^T V - I||_F <= tol``."""
    V = as_matrix(V)
    n, r = V.shape
    if r > n:
        raise ShapeError(f"Stiefel frame needs r <= n, got {V.shape}")
    err = np.linalg.norm(V.T @ V - np.eye(r))
    if err > tol:
        raise ValueError(f"columns are not orthonormal: ||V^T V - I||_F = {err:.3e}")
    return V


def is_stiefel(V, tol=STIEFEL_TOL):
    try:
        check_stiefel(V, tol)
    except ValueError:
        return False
    return True


def haar_stiefel(n, r, seed=0):
    """Haar-distributed ``n x r`` orthonormal frame.

    QR of an i.i.d. standard Gaussian matrix with ``diag(R) > 0``.  ``seed`` is
    an int or a :class:`~gats.rng.Stream` (consumed in place).
    """
    if r > n or r < 1:
        raise ShapeError(f"haar_stiefel needs 1 <= r <= n, got n={n}, r={r}")
    G = as_stream(seed, "haar_stiefel").normal((n, r))
    Q, R = np.linalg.qr(G)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return np.ascontiguousarray(Q * d)


def haar_orthogonal(n, seed=0):
    return haar_stiefel(n, n, seed)
