import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gats.anchor import frame_hash, make_anchor, medoid_index, pairwise_overlap, select_anchors
from gats.errors import ShapeError
from gats.linalg import haar_orthogonal, haar_stiefel
from gats.rng import Stream
from gats.tucker import hosvd


def brute_force_medoid(frames):
    N = len(frames)
    scores = []
    for i in range(N):
        s = 0.0
        for j in range(N):
            s += np.sum((frames[i].T @ frames[j]) ** 2)
        scores.append(s)
    best = max(scores)
    return next(i for i, s in enumerate(scores) if s >= best - 1e-9), np.array(scores)


def test_hand_example():
    h = np.sqrt(0.5)
    frames = [np.array([[1.0], [0], [0], [0]]), np.array([[0.0], [1], [0], [0]]), np.array([[h], [h], [0], [0]])]
    idx, scores = medoid_index(frames)
    assert idx == 2
    np.testing.assert_allclose(scores, [1.5, 1.5, 2.0], atol=1e-15)


def test_identical_and_single(rs):
    V = haar_stiefel(5, 2, rs)
    assert medoid_index([V, V.copy(), V.copy()])[0] == 0
    assert medoid_index([V])[0] == 0


def test_errors(rs):
    with pytest.raises(ValueError):
        medoid_index([])
    with pytest.raises(ShapeError):
        medoid_index([np.eye(3)[:, :1], np.eye(3)[:, :2]])


@pytest.mark.parametrize("N", [2, 5, 17, 50])
def test_matches_brute_force(N):
    rs = Stream(N, "medoid")
    frames = [haar_stiefel(8, 3, rs) for _ in range(N)]
    idx, scores = medoid_index(frames)
    bidx, bscores = brute_force_medoid(frames)
    assert idx == bidx
    np.testing.assert_allclose(scores, bscores, atol=1e-10)


def test_overlap_matrix_symmetric_with_diag_r(rs):
    frames = [haar_stiefel(7, 3, rs) for _ in range(6)]
    O = pairwise_overlap(frames)
    np.testing.assert_allclose(O, O.T, atol=1e-10)
    np.testing.assert_allclose(np.diag(O), 3.0, atol=1e-12)


def test_subsample_is_labelled_subset(rs):
    frames = [haar_stiefel(6, 2, rs) for _ in range(10)]
    idx, scores = medoid_index(frames, subsample=4, seed=1)
    assert 0 <= idx < 10 and scores.shape == (10,)
    assert medoid_index(frames, subsample=4, seed=1)[0] == idx


def test_select_anchors_per_mode(rs):
    same = haar_stiefel(4, 2, rs)
    corpus = [{1: same, 2: haar_stiefel(5, 2, rs)} for _ in range(5)]
    anchors = select_anchors(corpus, [1, 2])
    assert anchors[1].medoid_index == 0
    expect, _ = brute_force_medoid([c[2] for c in corpus])
    assert anchors[2].medoid_index == expect
    np.testing.assert_array_equal(anchors[2].frame, corpus[expect][2])
    assert anchors[2].hash == frame_hash(corpus[expect][2])


def test_select_anchors_from_tucker(rs):
    X = rs.normal((4, 5, 6))
    F = hosvd(X, (2, 2, 2))
    anchors = select_anchors([F], [1, 3])
    np.testing.assert_array_equal(anchors[3].frame, F.factors[2])
    assert set(anchors.frames()) == {1, 3}


def test_frame_hash_sensitive():
    V = np.eye(3)[:, :2]
    W = V.copy()
    W[0, 0] = np.nextafter(1.0, 2.0)
    assert frame_hash(V) != frame_hash(W)
    assert frame_hash(V) != frame_hash(V.reshape(2, 3))
    assert frame_hash(V) == frame_hash(V.copy())


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), N=st.integers(1, 8))
def test_scores_gauge_invariant(seed, N):
    rs = Stream(seed, "anchor-gauge")
    frames = [haar_stiefel(6, 3, rs) for _ in range(N)]
    rotated = [V @ haar_orthogonal(3, rs) for V in frames]
    a, sa = medoid_index(frames)
    b, sb = medoid_index(rotated)
    np.testing.assert_allclose(sa, sb, atol=1e-9)
    assert make_anchor(frames).medoid_index == a
