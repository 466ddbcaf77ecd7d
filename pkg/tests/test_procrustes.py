import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from gats.errors import OverlapViolation, ShapeError
from gats.linalg import haar_orthogonal, haar_stiefel, spd_sqrt, svd
from gats.procrustes import (
    aligned_sq_distance,
    ell,
    mc_aligned_distance,
    nuclear_norm,
    op_align,
    op_align_closed_form,
    op_solve,
    overlap_matrix,
)
from gats.rng import Stream

# ell(4) from the closed form with b = 3/4; cross-checked below by quadrature.
ELL_4 = 0.4359911241769174


def ell_by_quadrature(c):
    """Limit of ||V0^T V||_* / r as an integral against the limiting spectral law."""
    b = 4.0 * (c - 1.0) / c**2
    val, _ = integrate.quad(lambda x: math.sqrt(b - x) / (2 * math.pi * (1 - x)), 0.0, b, limit=200)
    return c * val + max(2.0 - c, 0.0)


def o2_grid(n=1800):
    th = 2 * np.pi * np.arange(n) / n
    c, s = np.cos(th), np.sin(th)
    rot = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    ref = np.stack([np.stack([c, s], -1), np.stack([s, -c], -1)], -2)
    return np.concatenate([rot, ref])


def test_op_solve_identity_and_rotation(rs):
    A = haar_stiefel(7, 3, rs)
    np.testing.assert_allclose(op_solve(A, A), np.eye(3), atol=1e-12)
    Q0 = haar_orthogonal(3, rs)
    np.testing.assert_allclose(op_solve(A, A @ Q0), Q0, atol=1e-9)
    with pytest.raises(ShapeError):
        op_solve(A, A[:, :2])


def test_op_solve_beats_o2_grid():
    grid = o2_grid()
    for i in range(20):
        rs = Stream(i, "o2-grid")
        A, B = haar_stiefel(6, 2, rs), haar_stiefel(6, 2, rs)
        best = np.sum((A @ op_solve(A, B) - B) ** 2)
        grid_min = np.min(np.sum((np.einsum("nr,grs->gns", A, grid) - B) ** 2, axis=(1, 2)))
        assert best <= grid_min + 1e-9


def test_op_align_hand_example():
    V = np.array([[0.6], [0.8], [0.0]])
    V0 = np.array([[0.0], [-1.0], [0.0]])
    res = op_align(V, V0)
    np.testing.assert_allclose(res.aligned, -V, atol=1e-15)
    np.testing.assert_allclose(res.rotation, [[-1.0]], atol=1e-15)
    assert res.sq_distance == pytest.approx(0.36 + 0.04, abs=1e-14)


def test_op_align_coincident(rs):
    V0 = haar_stiefel(8, 3, rs)
    res = op_align(V0, V0)
    np.testing.assert_allclose(res.aligned, V0, atol=1e-12)
    assert abs(res.sq_distance) <= 1e-12
    Q = haar_orthogonal(3, rs)
    np.testing.assert_allclose(op_align(V0 @ Q, V0).aligned, V0, atol=1e-12)


def test_overlap_violation_reported():
    V0 = np.eye(4)[:, :2]
    V = np.eye(4)[:, 1:3]
    with pytest.raises(OverlapViolation) as info:
        op_align(V, V0, mode=2, sample="s7")
    assert info.value.mode == 2 and info.value.sample == "s7"
    assert info.value.min_eig <= info.value.floor
    with pytest.raises(OverlapViolation):
        op_align_closed_form(V, V0)
    # op_solve still returns an optimal rotation on the degenerate pair
    Q = op_solve(V, V0)
    np.testing.assert_allclose(Q.T @ Q, np.eye(2), atol=1e-12)


def test_alignment_result_invariants(rs):
    V0, V = haar_stiefel(10, 3, rs), haar_stiefel(10, 3, rs)
    res = op_align(V, V0)
    Q = res.rotation
    assert np.linalg.norm(Q.T @ Q - np.eye(3)) <= 1e-9
    np.testing.assert_allclose(res.aligned, V @ Q, atol=1e-10)
    np.testing.assert_allclose(res.aligned @ res.aligned.T, V @ V.T, atol=1e-9)
    C = V0.T @ res.aligned
    np.testing.assert_allclose(C, C.T, atol=1e-8)
    assert np.linalg.eigvalsh(0.5 * (C + C.T)).min() >= -1e-8
    np.testing.assert_allclose(C, spd_sqrt(overlap_matrix(V, V0)), atol=1e-8)
    assert np.sqrt(res.sq_distance) <= np.linalg.norm(V0 - V) + 1e-10


def test_nuclear_norm(rs):
    assert nuclear_norm(np.eye(4)) == pytest.approx(4.0, abs=1e-14)
    assert nuclear_norm(np.diag([3.0, -2.0])) == pytest.approx(5.0, abs=1e-14)
    M = rs.normal((4, 4))
    assert nuclear_norm(M) == pytest.approx(np.sum(svd(M, "jacobi").S), abs=1e-12)


def test_ell_closed_form_values():
    assert ell(1.0) == 1.0
    assert abs(ell(2.0) - 2.0 / math.pi) <= 1e-15
    assert ell(4.0) == pytest.approx(ELL_4, abs=1e-15)
    assert round(ell(4.0), 2) == 0.44
    with pytest.raises(ValueError):
        ell(0.5)


@pytest.mark.parametrize("c", [1.1, 1.5, 2.5, 3.0, 4.0, 6.0, 8.0])
def test_ell_matches_quadrature(c):
    assert ell(c) == pytest.approx(ell_by_quadrature(c), abs=1e-8)


def test_ell_strictly_decreasing():
    cs = np.arange(100, 801) / 100.0
    vals = np.array([ell(c) for c in cs])
    assert np.all(np.diff(vals) < 0)
    assert np.all((vals > 0) & (vals <= 1))


def test_ell_continuous_near_edges():
    for c in (1.0 + 1e-9, 2.0 - 1e-9, 2.0 + 1e-9):
        assert ell(c) == pytest.approx(ell(round(c)), abs=1e-4)


def test_mc_small_case_by_hand():
    mean, se = mc_aligned_distance(2, 1, 1, seed=3)
    rs = Stream(3, "prop2", 0)
    v0, v = haar_stiefel(2, 1, rs), haar_stiefel(2, 1, rs)
    assert mean == pytest.approx(1.0 - abs(float(v0[:, 0] @ v[:, 0])), abs=1e-15)
    assert math.isnan(se)


def test_mc_c2_band():
    mean, _ = mc_aligned_distance(40, 20, 200, seed=0)
    assert abs(mean - (1.0 - ell(2.0))) <= 0.03


def test_mc_thread_independent():
    a = mc_aligned_distance(30, 6, 12, seed=4, threads=1)
    b = mc_aligned_distance(30, 6, 12, seed=4, threads=3)
    assert a == b


def test_mc_rejects_bad_args():
    with pytest.raises(ShapeError):
        mc_aligned_distance(5, 5, 1)
    with pytest.raises(ValueError):
        mc_aligned_distance(5, 2, 0)


frame_shapes = st.tuples(st.integers(2, 12), st.integers(1, 4)).filter(lambda nr: nr[1] < nr[0])


@settings(max_examples=60, deadline=None)
@given(shape=frame_shapes, seed=st.integers(0, 2**31))
def test_alignment_properties(shape, seed):
    n, r = shape
    rs = Stream(seed, "align-prop")
    V0, V = haar_stiefel(n, r, rs), haar_stiefel(n, r, rs)
    lam = np.linalg.eigvalsh(overlap_matrix(V, V0)).min()
    if lam <= 1e-6:
        return
    res = op_align(V, V0)
    np.testing.assert_allclose(res.aligned, op_align_closed_form(V, V0), atol=1e-8)
    Q = haar_orthogonal(r, rs)
    np.testing.assert_allclose(op_align(V @ Q, V0).aligned, res.aligned, atol=1e-8)
    assert res.sq_distance == pytest.approx(aligned_sq_distance(V, V0), abs=1e-8)
    for _ in range(10):
        R = haar_orthogonal(r, rs)
        assert np.linalg.norm(V @ res.rotation - V0) <= np.linalg.norm(V @ R - V0) + 1e-9
