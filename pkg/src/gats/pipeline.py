"""Corpus-level encode/decode used by the CLI.

An encoding config is a plain dict:

* MGP: ``{"type": "MGP", "rank": r, "patch": [p0, p1] or None}``; samples are
  2-d matrices or channel-first 3-d stacks, each channel with its own anchor.
* TGP: ``{"type": "TGP", "ranks": [...], "aligned_modes": [...], "factors": "gram"|"hooi"}``.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .anchor import AnchorSet, make_anchor
from .errors import ShapeError
from .linalg import truncated_svd
from .primitives import (
    MatrixGrassmannPrimitive,
    PatchSpec,
    TensorGrassmannPrimitive,
    mgp_decode,
    mgp_encode,
    mode_frame,
    patchify,
    tgp_decode,
    tgp_encode,
    unpatchify,
)
from .tucker import hooi


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def channels(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        return [X]
    if X.ndim == 3:
        return list(X)
    raise ShapeError(f"MGP samples must be 2-d or channel-first 3-d, got shape {X.shape}")


def patch_spec(cfg, shape):
    return PatchSpec(shape, cfg["patch"]) if cfg.get("patch") else None


def mgp_matrices(X, cfg):
    out = []
    for M in channels(X):
        spec = patch_spec(cfg, M.shape)
        out.append(patchify(M, spec) if spec else M)
    return out


def tgp_frames(X, cfg):
    modes = cfg["aligned_modes"]
    ranks = dict(zip(modes, cfg["ranks"]))
    if cfg.get("factors", "gram") == "hooi":
        full = [ranks.get(k, n) for k, n in enumerate(np.shape(X), start=1)]
        F = hooi(X, full)
        return {k: F.factors[k - 1] for k in modes}
    return {k: mode_frame(X, k, ranks[k]) for k in modes}


def build_anchors(samples, cfg, subsample=None, seed=0, threads=1):
    if cfg["type"] == "MGP":
        per_sample = _map(lambda X: [truncated_svd(M, cfg["rank"]).V for M in mgp_matrices(X, cfg)],
                          samples, threads)
        n_ch = len(per_sample[0])
        if any(len(fr) != n_ch for fr in per_sample):
            raise ShapeError("all samples must have the same number of channels")
        return AnchorSet({f"c{c}": make_anchor([fr[c] for fr in per_sample], subsample, seed)
                          for c in range(n_ch)})
    per_sample = _map(lambda X: tgp_frames(X, cfg), samples, threads)
    return AnchorSet({k: make_anchor([fr[k] for fr in per_sample], subsample, seed)
                      for k in cfg["aligned_modes"]})


def encode_sample(X, cfg, anchors, sample=None):
    if cfg["type"] == "MGP":
        out = []
        for c, M in enumerate(mgp_matrices(X, cfg)):
            key = f"c{c}"
            out.append(mgp_encode(M, cfg["rank"], anchors[key].frame, anchors[key].hash, sample=sample))
        return out
    return tgp_encode(X, cfg["ranks"], cfg["aligned_modes"], anchors,
                      factor_method=cfg.get("factors", "gram"), sample=sample)


def encode_corpus(samples, cfg, anchors, ids=None, threads=1):
    ids = ids or list(range(len(samples)))
    return _map(lambda pair: encode_sample(pair[1], cfg, anchors, sample=pair[0]),
                list(zip(ids, samples)), threads)


def decode_sample(P, man):
    if isinstance(P, TensorGrassmannPrimitive):
        return tgp_decode(P)
    dims = man.get("dims")
    out = []
    for p in P:
        M = mgp_decode(p)
        if man.get("patch"):
            field_dims = dims[-2:]
            M = unpatchify(M, PatchSpec(field_dims, man["patch"]))
        out.append(M)
    return out[0] if len(out) == 1 and len(dims) == 2 else np.stack(out)


# -- flat vectors for the diffusion engine ---------------------------------


def primitive_layout(P):
    """``[(name, shape), ...]`` describing the flat vector of a primitive."""
    if isinstance(P, TensorGrassmannPrimitive):
        return [("core", list(P.core.shape))] + [(f"U{k}", list(U.shape)) for k, U in sorted(P.factors.items())]
    lay = []
    for c, p in enumerate(P):
        lay += [(f"A_c{c}", list(p.A.shape)), (f"V_c{c}", list(p.V_tilde.shape))]
    return lay


def flatten_primitive(P):
    if isinstance(P, TensorGrassmannPrimitive):
        parts = [P.core.ravel()] + [U.ravel() for _, U in sorted(P.factors.items())]
    else:
        parts = []
        for p in P:
            parts += [p.A.ravel(), p.V_tilde.ravel()]
    return np.concatenate(parts)


def unflatten_primitive(vec, layout, man):
    arrays = {}
    off = 0
    for name, shape in layout:
        n = int(np.prod(shape))
        arrays[name] = np.asarray(vec[off:off + n], dtype=np.float64).reshape(shape)
        off += n
    if man["type"] == "TGP":
        factors = {int(k[1:]): v for k, v in arrays.items() if k.startswith("U")}
        return TensorGrassmannPrimitive(arrays["core"], factors, tuple(man["dims"]))
    return [MatrixGrassmannPrimitive(arrays[f"A_c{c}"], arrays[f"V_c{c}"]) for c in range(man["channels"])]
