"""Fast invariant suite behind ``gats selfcheck``.

Each check draws small random inputs from a fixed seed and tests one
identity; the whole suite runs in a few seconds.
"""
import math

import numpy as np

from . import kernels
from .datagen import RdConfig, random_initial_condition, reaction_diffusion_1d, synthetic_lowrank
from .linalg import haar_stiefel, svd, truncated_svd
from .primitives import PatchSpec, mgp_decode, mgp_encode, patchify, tgp_decode, tgp_encode, unpatchify
from .procrustes import aligned_sq_distance, ell, op_align, op_align_closed_form
from .rng import Stream
from .tensor import fold, mode_product, unfold
from .tucker import hooi


def _fold_roundtrip(rs):
    X = rs.normal((3, 4, 5))
    return all(np.array_equal(fold(unfold(X, k), k, X.shape), X) for k in (1, 2, 3))


def _mode_product_commutes(rs):
    X = rs.normal((3, 4, 5))
    A, B = rs.normal((2, 3)), rs.normal((6, 5))
    return np.allclose(mode_product(mode_product(X, A, 1), B, 3), mode_product(mode_product(X, B, 3), A, 1))


def _svd_routes_agree(rs):
    M = rs.normal((7, 5))
    a, b = svd(M), svd(M, method="jacobi")
    return np.allclose(a.S, b.S, atol=1e-12) and np.allclose(a.U[:, :5], b.U[:, :5], atol=1e-10)


def _op_routes_agree(rs):
    V0, V = haar_stiefel(12, 3, rs), haar_stiefel(12, 3, rs)
    return np.allclose(op_align(V, V0).aligned, op_align_closed_form(V, V0), atol=1e-10)


def _distance_identity(rs):
    V0, V = haar_stiefel(12, 3, rs), haar_stiefel(12, 3, rs)
    direct = float(np.sum((V0 - op_align(V, V0).aligned) ** 2))
    return abs(direct - aligned_sq_distance(V, V0)) < 1e-10


def _alignment_invariance(rs):
    V0, V = haar_stiefel(10, 3, rs), haar_stiefel(10, 3, rs)
    Q, _ = np.linalg.qr(rs.normal((3, 3)))
    return np.allclose(op_align(V, V0).aligned, op_align(V @ Q, V0).aligned, atol=1e-10)


def _mgp_roundtrip(rs):
    M = rs.normal((9, 3)) @ rs.normal((3, 8))
    V0 = haar_stiefel(8, 3, rs)
    return np.allclose(mgp_decode(mgp_encode(M, 3, V0)), M, atol=1e-10)


def _tgp_roundtrip(rs):
    (X,) = synthetic_lowrank((6, 5, 4), (2, 3, 2), seed=int(rs.raw(1)[0] % 2**31))
    anchors = {1: haar_stiefel(6, 2, rs), 3: haar_stiefel(4, 2, rs)}
    P = tgp_encode(X, [2, 2], [1, 3], anchors)
    return np.allclose(tgp_decode(P), X, atol=1e-10)


def _patch_roundtrip(rs):
    spec = PatchSpec((8, 6), (4, 3))
    X = rs.normal((8, 6))
    return np.array_equal(unpatchify(patchify(X, spec), spec), X)


def _hooi_monotone(rs):
    X = rs.normal((6, 5, 4))
    h = hooi(X, (2, 2, 2), max_iter=10, tol=1e-15).history
    return all(b <= a + 1e-12 for a, b in zip(h, h[1:]))


def _truncation_optimal(rs):
    M = rs.normal((10, 8))
    S = svd(M).S
    t = truncated_svd(M, 3)
    err = np.linalg.norm(M - t.U * t.S @ t.V.T)
    return abs(err - math.sqrt(np.sum(S[3:] ** 2))) < 1e-10


def _ell_edges(rs):
    return abs(ell(1.0) - 1.0) < 1e-12 and abs(ell(2.0) - 2 / math.pi) < 1e-12


def _rd_bounded(rs):
    cfg = RdConfig(nu=1e-3, rho=1.0, nx=64, nt=11)
    u = reaction_diffusion_1d(cfg, random_initial_condition(64, seed=3))
    return bool(np.all(u >= 0) and np.all(u <= 1))


def _backends_agree(rs):
    if len(kernels.available_backends()) < 2:
        return True
    u0 = random_initial_condition(64, seed=5)
    args = (u0, 1e-3, 1.0, 1 / 64, 1e-3, 5, 6)
    a = kernels.get_backend("cython").rd_integrate(*args)
    b = kernels.get_backend("python").rd_integrate(*args)
    return np.allclose(a, b, rtol=0, atol=1e-14)


CHECKS = [
    ("unfold/fold round trip", _fold_roundtrip),
    ("mode products on distinct modes commute", _mode_product_commutes),
    ("LAPACK and Jacobi SVD agree", _svd_routes_agree),
    ("Procrustes SVD and closed-form routes agree", _op_routes_agree),
    ("aligned distance equals 2r - 2 nuclear norm", _distance_identity),
    ("alignment ignores the frame's basis", _alignment_invariance),
    ("MGP decode(encode) is exact at full rank", _mgp_roundtrip),
    ("TGP decode(encode) is exact at full rank", _tgp_roundtrip),
    ("patchify/unpatchify round trip", _patch_roundtrip),
    ("HOOI error is non-increasing", _hooi_monotone),
    ("truncated SVD error is the tail energy", _truncation_optimal),
    ("ell(1) = 1 and ell(2) = 2/pi", _ell_edges),
    ("reaction-diffusion stays in [0, 1]", _rd_bounded),
    ("compiled and Python kernels agree", _backends_agree),
]


def run_selfcheck(seed=0, verbose=False):
    """Run every check; returns ``True`` when all pass."""
    ok = True
    for i, (name, fn) in enumerate(CHECKS):
        try:
            passed = bool(fn(Stream(seed, "selfcheck", i)))
            detail = ""
        except Exception as exc:  # a crash is a failure, reported with its message
            passed, detail = False, f" ({type(exc).__name__}: {exc})"
        ok &= passed
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'}  {name}{detail}")
    if verbose:
        print(f"{'all checks passed' if ok else 'SOME CHECKS FAILED'} (kernels: {kernels.BACKEND})")
    return ok
