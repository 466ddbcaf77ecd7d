"""Medoid anchor selection over a corpus of subspace frames."""
import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .tucker import TuckerFactors

TIE_TOL = 1e-9
_BLOCK_ELEMS = 1 << 24


def frame_hash(V):
    """SHA-256 over shape and little-endian float64 payload."""
    V = np.ascontiguousarray(V, dtype="<f8")
    h = hashlib.sha256()
    h.update(np.asarray(V.shape, dtype="<u8").tobytes())
    h.update(V.tobytes())
    return h.hexdigest()


def _stack(frames):
    if len(frames) == 0:
        raise ValueError("empty corpus")
    shape = np.shape(frames[0])
    for i, V in enumerate(frames):
        if np.shape(V) != shape:
            raise ShapeError(f"frame {i} has shape {np.shape(V)}, expected {shape}")
    return np.stack([np.asarray(V, dtype=np.float64) for V in frames])


def pairwise_overlap(frames, cols=None):
    """``O[i, j] = ||V_i^T V_j||_F^2`` for all ``i`` and ``j`` in ``cols``.

    Computed exactly in row blocks; ``cols`` restricts the ``j`` range.
    """
    F = _stack(frames)
    N, n, r = F.shape
    Fj = F if cols is None else F[np.asarray(cols)]
    M = Fj.shape[0]
    # (n, M*r) so that one GEMM per block gives all r x r cross products.
    W = np.ascontiguousarray(Fj.transpose(1, 0, 2).reshape(n, M * r))
    out = np.empty((N, M))
    block = max(1, _BLOCK_ELEMS // max(1, r * M * r))
    for s in range(0, N, block):
        Fi = F[s:s + block]
        C = np.einsum("bnr,nm->brm", Fi, W).reshape(Fi.shape[0], r, M, r)
        out[s:s + block] = np.einsum("brms,brms->bm", C, C)
    return out


def medoid_index(frames, subsample=None, seed=0):
    """Index maximizing ``sum_j ||V_i^T V_j||_F^2`` (smallest index among ties).

    ``subsample`` (approximate) scores against only that many randomly chosen
    ``j``.  Returns ``(index, scores)``.
    """
    cols = None
    if subsample is not None and subsample < len(frames):
        from .rng import Stream

        u = Stream(seed, "anchor-subsample").uniform((len(frames),))
        cols = np.sort(np.argsort(u, kind="stable")[:subsample])
    O = pairwise_overlap(frames, cols)
    scores = np.array([np.sum(row) for row in O])
    best = scores.max()
    idx = int(np.flatnonzero(scores >= best - TIE_TOL)[0])
    return idx, scores


@dataclass(frozen=True)
class Anchor:
    frame: np.ndarray
    medoid_index: int
    overlap_scores: np.ndarray
    hash: str


@dataclass
class AnchorSet:
    """Per-key anchors; keys are mode numbers (TGP) or labels such as ``"c0"`` (MGP channels)."""

    anchors: dict

    def __getitem__(self, key):
        return self.anchors[key]

    def __contains__(self, key):
        return key in self.anchors

    def frames(self):
        return {k: a.frame for k, a in self.anchors.items()}

    def hashes(self):
        return {k: a.hash for k, a in self.anchors.items()}


def make_anchor(frames, subsample=None, seed=0):
    idx, scores = medoid_index(frames, subsample=subsample, seed=seed)
    V0 = np.array(frames[idx], dtype=np.float64)
    return Anchor(V0, idx, scores, frame_hash(V0))


def select_anchors(corpus_factors, aligned_modes, subsample=None, seed=0):
    """One medoid anchor per aligned mode, computed independently per mode.

    ``corpus_factors`` holds per-sample :class:`TuckerFactors` or mappings
    ``mode -> frame``.
    """
    if len(corpus_factors) == 0:
        raise ValueError("empty corpus")
    anchors = {}
    for k in aligned_modes:
        frames = []
        for F in corpus_factors:
            frames.append(F.factors[k - 1] if isinstance(F, TuckerFactors) else F[k])
        anchors[k] = make_anchor(frames, subsample=subsample, seed=seed)
    return AnchorSet(anchors)
