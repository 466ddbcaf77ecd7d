"""Dense tensor plumbing: validation, mode-k unfolding/folding, mode-k
products and the mode-k Gram operator.

Tensors and matrices are plain ``float64`` numpy arrays.  Mode indices are
1-based (``k = 1`` is the first axis), matching the usual mode-k product
notation.  ``unfold(X, k)`` orders its columns over the remaining indices
``(i_1, ..., i_{k-1}, i_{k+1}, ..., i_d)`` with the last one varying fastest.
"""
import numpy as np

from .errors import ShapeError

MAX_NDIM = 8


def as_tensor(X, copy=False):
    """Validate ``X`` as a finite float64 array with 1 to 8 axes."""
    arr = np.array(X, dtype=np.float64, copy=copy) if copy else np.asarray(X, dtype=np.float64)
    if arr.ndim < 1 or arr.ndim > MAX_NDIM:
        raise ShapeError(f"tensors must have 1..{MAX_NDIM} axes, got {arr.ndim}")
    if 0 in arr.shape:
        raise ShapeError(f"all dimensions must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains NaN or Inf")
    return arr


def as_matrix(M):
    arr = as_tensor(M)
    if arr.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {arr.shape}")
    return arr


def _check_mode(k, ndim):
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= ndim:
        raise ShapeError(f"mode index {k!r} out of range 1..{ndim}")
    return int(k) - 1


def unfold(X, k):
    """Mode-k matricization, shape ``(n_k, prod_{j != k} n_j)``."""
    X = np.asarray(X, dtype=np.float64)
    ax = _check_mode(k, X.ndim)
    return np.ascontiguousarray(np.moveaxis(X, ax, 0).reshape(X.shape[ax], -1))


def fold(M, k, dims):
    """Inverse of :func:`unfold`."""
    dims = tuple(int(n) for n in dims)
    ax = _check_mode(k, len(dims))
    M = np.asarray(M, dtype=np.float64)
    rest = dims[:ax] + dims[ax + 1:]
    expected = (dims[ax], int(np.prod(rest, dtype=np.int64)))
    if M.shape != expected:
        raise ShapeError(f"cannot fold {M.shape} into mode {k} of {dims}; expected {expected}")
    return np.ascontiguousarray(np.moveaxis(M.reshape((dims[ax],) + rest), 0, ax))


def mode_product(C, U, k):
    """``C x_k U``: contract mode ``k`` of ``C`` with the columns of ``U``."""
    C = np.asarray(C, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    ax = _check_mode(k, C.ndim)
    if U.ndim != 2 or U.shape[1] != C.shape[ax]:
        raise ShapeError(f"mode-{k} product needs U with {C.shape[ax]} columns, got {U.shape}")
    out = np.tensordot(U, C, axes=(1, ax))
    return np.ascontiguousarray(np.moveaxis(out, 0, ax))


def multi_mode_product(C, mats, transpose=False):
    """Apply ``{k: U_k}`` in ascending mode order (``U_k^T`` if ``transpose``)."""
    out = C
    for k in sorted(mats):
        U = mats[k]
        out = mode_product(out, U.T if transpose else U, k)
    return out


def sk_gram(X, k):
    """Mode-k Gram matrix ``unfold(X, k) @ unfold(X, k).T`` (symmetric PSD)."""
    A = unfold(X, k)
    G = A @ A.T
    return 0.5 * (G + G.T)


def frobenius_norm(X):
    return float(np.linalg.norm(np.asarray(X, dtype=np.float64).ravel()))


def rel_err_l2(X, X_hat):
    """``||X - X_hat||_F / ||X||_F``."""
    X = np.asarray(X, dtype=np.float64)
    X_hat = np.asarray(X_hat, dtype=np.float64)
    if X.shape != X_hat.shape:
        raise ShapeError(f"shape mismatch {X.shape} vs {X_hat.shape}")
    ref = frobenius_norm(X)
    if ref == 0.0:
        raise ZeroDivisionError("reference tensor has zero norm")
    return frobenius_norm(X - X_hat) / ref
