"""Grassmannian primitives: anchored encode/decode of matrices (MGP) and
tensors (TGP), patchification, and per-sample compression accounting.

An MGP stores ``(A, V~)`` with ``V~ = op(V, V0)`` the anchor-aligned frame of
the top-``r`` right singular subspace and ``A = M V~``; decoding is
``A V~^T``.  A TGP stores a core plus one aligned frame per aligned mode.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .linalg import check_stiefel, svd, sym_eig, truncated_svd
from .procrustes import op_align
from .tensor import as_matrix, as_tensor, mode_product, sk_gram, unfold
from .tucker import hooi

RANK_REL_TOL = 1e-10


@dataclass(frozen=True)
class PatchSpec:
    dims: tuple
    patch: tuple

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        patch = tuple(int(p) for p in self.patch)
        if len(dims) != 2 or len(patch) != 2:
            raise ShapeError("patchification is defined for 2-d fields")
        if any(p < 1 or n % p for n, p in zip(dims, patch)):
            raise ShapeError(f"patch {patch} does not tile {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "patch", patch)

    @property
    def grid(self):
        return (self.dims[0] // self.patch[0], self.dims[1] // self.patch[1])

    @property
    def matrix_shape(self):
        g0, g1 = self.grid
        return (g0 * g1, self.patch[0] * self.patch[1])


def patchify(X, spec):
    """Rows are row-major flattened patches, enumerated row-major over the grid."""
    X = as_matrix(X)
    if X.shape != spec.dims:
        raise ShapeError(f"field {X.shape} does not match patch spec {spec.dims}")
    (g0, g1), (p0, p1) = spec.grid, spec.patch
    return np.ascontiguousarray(X.reshape(g0, p0, g1, p1).transpose(0, 2, 1, 3).reshape(g0 * g1, p0 * p1))


def unpatchify(P, spec):
    P = np.asarray(P, dtype=np.float64)
    if P.shape != spec.matrix_shape:
        raise ShapeError(f"patch matrix {P.shape} does not match {spec.matrix_shape}")
    (g0, g1), (p0, p1) = spec.grid, spec.patch
    return np.ascontiguousarray(P.reshape(g0, g1, p0, p1).transpose(0, 2, 1, 3).reshape(spec.dims))


# -- matrix primitives ------------------------------------------------------


@dataclass
class MatrixGrassmannPrimitive:
    A: np.ndarray
    V_tilde: np.ndarray
    anchor_hash: str | None = None
    on_manifold: bool = True
    overlap_min_eig: float = float("nan")

    @property
    def rank(self):
        return self.V_tilde.shape[1]


def mgp_encode_frame(M, V, anchor, anchor_hash=None, sample=None):
    """Encode ``M`` given any orthonormal frame ``V`` of its retained row space."""
    M = as_matrix(M)
    res = op_align(V, anchor, sample=sample)
    A = M @ res.aligned
    S = svd(A).S
    on_manifold = bool(S[-1] > RANK_REL_TOL * S[0]) if S[0] > 0 else False
    return MatrixGrassmannPrimitive(A, res.aligned, anchor_hash, on_manifold, res.overlap_min_eig)


def mgp_encode(M, r, anchor, anchor_hash=None, sample=None):
    """``M -> (M V~, V~)`` with ``V~`` the anchor-aligned top-``r`` right singular frame."""
    M = as_matrix(M)
    anchor = as_matrix(anchor)
    if not isinstance(r, (int, np.integer)) or not 1 <= r <= min(M.shape):
        raise ShapeError(f"rank {r!r} out of range 1..{min(M.shape)}")
    if anchor.shape != (M.shape[1], r):
        raise ShapeError(f"anchor must be {(M.shape[1], r)}, got {anchor.shape}")
    V = truncated_svd(M, r).V
    return mgp_encode_frame(M, V, anchor, anchor_hash, sample)


def mgp_decode(P):
    return P.A @ P.V_tilde.T


def encode_condition(X0, anchor, anchor_hash=None):
    """Encode a conditioning matrix with the same anchor as its target.

    ``X0`` has as many columns as the anchor has rows; the rank is the
    anchor's column count, so condition and target share one frame system.
    """
    X0 = as_matrix(X0)
    anchor = as_matrix(anchor)
    return mgp_encode(X0, anchor.shape[1], anchor, anchor_hash)


# -- tensor primitives ------------------------------------------------------


@dataclass
class TensorGrassmannPrimitive:
    core: np.ndarray
    factors: dict
    dims: tuple
    anchor_hashes: dict = field(default_factory=dict)

    @property
    def aligned_modes(self):
        return tuple(sorted(self.factors))

    @property
    def ranks(self):
        return {k: U.shape[1] for k, U in self.factors.items()}

    def __post_init__(self):
        d = len(self.dims)
        if self.core.ndim != d:
            raise ShapeError(f"core has {self.core.ndim} modes, dims {self.dims}")
        for k in range(1, d + 1):
            want = self.factors[k].shape[1] if k in self.factors else self.dims[k - 1]
            if self.core.shape[k - 1] != want:
                raise ShapeError(f"core mode {k} has size {self.core.shape[k - 1]}, expected {want}")
        for k, U in self.factors.items():
            if U.shape[0] != self.dims[k - 1]:
                raise ShapeError(f"factor {k} has {U.shape[0]} rows, mode size {self.dims[k - 1]}")


def _normalize_ranks(ranks, aligned_modes):
    if isinstance(ranks, dict):
        return {int(k): int(ranks[k]) for k in aligned_modes}
    ranks = list(ranks)
    if len(ranks) != len(aligned_modes):
        raise ShapeError(f"need one rank per aligned mode {tuple(aligned_modes)}, got {ranks}")
    return {int(k): int(r) for k, r in zip(aligned_modes, ranks)}


def mode_frame(X, k, r):
    """Top-``r`` eigenvectors of ``sk_gram(X, k)``, computed from the unfolding's SVD."""
    return truncated_svd(unfold(X, k), r).U


def tgp_encode(X, ranks, aligned_modes, anchors, factor_method="gram", sample=None):
    """Anchored TGP of ``X`` over ``aligned_modes`` (1-based, any subset).

    ``anchors`` is an :class:`~gats.anchor.AnchorSet` or a ``mode -> frame``
    mapping.  ``factor_method="hooi"`` takes frames from a HOOI fit that keeps
    unaligned modes at full size instead of from the mode-k Gram matrices.
    """
    X = as_tensor(X)
    modes = tuple(sorted(int(k) for k in aligned_modes))
    rk = _normalize_ranks(ranks, modes)
    frames = anchors.frames() if hasattr(anchors, "frames") else dict(anchors)
    hashes = anchors.hashes() if hasattr(anchors, "hashes") else {}
    for k in modes:
        if not 1 <= k <= X.ndim:
            raise ShapeError(f"aligned mode {k} out of range 1..{X.ndim}")
        if not 1 <= rk[k] <= X.shape[k - 1]:
            raise ShapeError(f"rank {rk[k]} for mode {k} out of range 1..{X.shape[k - 1]}")
        if np.shape(frames[k]) != (X.shape[k - 1], rk[k]):
            raise ShapeError(f"anchor for mode {k} must be {(X.shape[k - 1], rk[k])}, got {np.shape(frames[k])}")
    if factor_method == "gram":
        raw = {k: mode_frame(X, k, rk[k]) for k in modes}
    elif factor_method == "hooi":
        full = [rk.get(k, n) for k, n in enumerate(X.shape, start=1)]
        F = hooi(X, full)
        raw = {k: F.factors[k - 1] for k in modes}
    else:
        raise ValueError(f"unknown factor_method {factor_method!r}")
    return tgp_encode_frames(X, raw, frames, hashes, sample=sample)


def tgp_encode_frames(X, raw_frames, anchor_frames, anchor_hashes=None, sample=None):
    """Align the given per-mode frames and contract ``X`` onto them."""
    X = as_tensor(X)
    aligned = {}
    for k in sorted(raw_frames):
        aligned[k] = op_align(raw_frames[k], anchor_frames[k], mode=k, sample=sample).aligned
    core = X
    for k in sorted(aligned):
        core = mode_product(core, aligned[k].T, k)
    hashes = {k: (anchor_hashes or {}).get(k) for k in aligned}
    return TensorGrassmannPrimitive(core, aligned, tuple(X.shape), hashes)


def tgp_decode(P):
    out = P.core
    for k in sorted(P.factors):
        out = mode_product(out, P.factors[k], k)
    return out


def mode_rank(X, k, rel_tol=1e-10):
    """Numerical rank of ``sk_gram(X, k)``."""
    w, _ = sym_eig(sk_gram(X, k))
    return int(np.sum(w > rel_tol * max(w[0], 0.0))) if w[0] > 0 else 0


def validate_primitive(P):
    """Check orthonormality of all stored frames."""
    if isinstance(P, MatrixGrassmannPrimitive):
        check_stiefel(P.V_tilde)
    else:
        for U in P.factors.values():
            check_stiefel(U)
    return P


# -- accounting -------------------------------------------------------------


def compression_ratio(dims, ranks, aligned_modes):
    """Entries of the original over entries of its primitive.

    The primitive holds a core (``r_k`` on aligned modes, ``n_k`` elsewhere)
    plus an ``n_k x r_k`` frame per aligned mode.  ``ranks`` is either a full
    per-mode vector or one entry per aligned mode.
    """
    dims = tuple(int(n) for n in dims)
    modes = tuple(sorted(int(k) for k in aligned_modes))
    ranks = list(ranks)
    if len(ranks) == len(dims):
        rk = {k: int(ranks[k - 1]) for k in modes}
    else:
        rk = _normalize_ranks(ranks, modes)
    core = 1
    frames = 0
    for k, n in enumerate(dims, start=1):
        if k in rk:
            if not 1 <= rk[k] <= n:
                raise ShapeError(f"rank {rk[k]} for mode {k} out of range 1..{n}")
            core *= rk[k]
            frames += n * rk[k]
        else:
            core *= n
    return float(np.prod(dims, dtype=np.float64)) / (core + frames)
