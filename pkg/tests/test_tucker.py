import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gats.datagen import synthetic_lowrank
from gats.errors import ShapeError
from gats.linalg import haar_orthogonal, sym_eig, truncated_svd
from gats.rng import Stream
from gats.tensor import mode_product, rel_err_l2, sk_gram
from gats.tucker import TuckerFactors, hooi, hosvd, tucker_reconstruct


def gram_hosvd_error(X, ranks):
    """Independent HOSVD: factors from eigenvectors of the mode Gram matrices."""
    factors = [sym_eig(sk_gram(X, k))[1][:, :r] for k, r in enumerate(ranks, start=1)]
    core = X
    for k, U in enumerate(factors, start=1):
        core = mode_product(core, U.T, k)
    Xh = core
    for k, U in enumerate(factors, start=1):
        Xh = mode_product(Xh, U, k)
    return rel_err_l2(X, Xh)


def test_hosvd_exact_rank():
    (X,) = synthetic_lowrank((5, 6, 7), (2, 3, 2), seed=1)
    assert rel_err_l2(X, tucker_reconstruct(hosvd(X, (2, 3, 2)))) <= 1e-10


def test_hosvd_full_rank_exact(rs):
    X = rs.normal((3, 4, 5))
    assert rel_err_l2(X, tucker_reconstruct(hosvd(X, X.shape))) <= 1e-12


def test_hosvd_matches_gram_oracle(rs):
    X = rs.normal((4, 5, 6))
    err = rel_err_l2(X, tucker_reconstruct(hosvd(X, (2, 2, 2))))
    assert err == pytest.approx(gram_hosvd_error(X, (2, 2, 2)), abs=1e-9)


def test_hosvd_matrix_equals_truncated_svd(rs):
    M = rs.normal((7, 5))
    F = hosvd(M, (3, 3))
    t = truncated_svd(M, 3)
    assert np.linalg.norm(M - tucker_reconstruct(F)) == pytest.approx(np.linalg.norm(M - t.reconstruct()), abs=1e-9)
    np.testing.assert_allclose(tucker_reconstruct(F), F.factors[0] @ F.core @ F.factors[1].T, atol=1e-12)


def test_rank_validation():
    with pytest.raises(ShapeError):
        hosvd(np.zeros((3, 3)), (4, 1))
    with pytest.raises(ShapeError):
        hosvd(np.zeros((3, 3)), (1,))
    with pytest.raises(ValueError):
        hooi(np.ones((3, 3)), (1, 1), max_iter=0)


def test_hooi_exact_rank_one_sweep():
    (X,) = synthetic_lowrank((6, 5, 4), (2, 2, 3), seed=2)
    F = hooi(X, (2, 2, 3))
    assert len(F.history) <= 2
    assert rel_err_l2(X, tucker_reconstruct(F)) <= 1e-10


def test_hooi_monotone_and_beats_hosvd(rs):
    X = rs.normal((6, 6, 6))
    F = hooi(X, (3, 3, 3), max_iter=25, tol=1e-12)
    h = F.history
    assert len(h) > 2
    assert all(b <= a + 1e-12 for a, b in zip(h, h[1:]))
    e_hosvd = rel_err_l2(X, tucker_reconstruct(hosvd(X, (3, 3, 3))))
    assert rel_err_l2(X, tucker_reconstruct(F)) <= e_hosvd + 1e-12
    assert h[0] == pytest.approx(e_hosvd, abs=1e-14)


def test_hooi_max_iter_one(rs):
    X = rs.normal((5, 5, 5))
    F = hooi(X, (2, 2, 2), max_iter=1)
    assert len(F.history) == 2


def test_reconstruct_identity_factors(rs):
    X = rs.normal((2, 3, 4))
    F = TuckerFactors(X, [np.eye(n) for n in X.shape])
    np.testing.assert_array_equal(tucker_reconstruct(F), X)


def test_reconstruct_mode_order_irrelevant(rs):
    core = rs.normal((2, 3, 2))
    Us = [rs.normal((4, 2)), rs.normal((5, 3)), rs.normal((3, 2))]
    ref = tucker_reconstruct(TuckerFactors(core, Us))
    for order in [(3, 1, 2), (2, 3, 1)]:
        out = core
        for k in order:
            out = mode_product(out, Us[k - 1], k)
        np.testing.assert_allclose(out, ref, atol=1e-12)


def test_factor_shape_check():
    with pytest.raises(ShapeError):
        TuckerFactors(np.zeros((2, 2)), [np.zeros((3, 2)), np.zeros((3, 3))])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), k=st.integers(1, 3))
def test_gauge_covariance(seed, k):
    rs = Stream(seed, "gauge")
    X = rs.normal((4, 5, 3))
    F = hosvd(X, (2, 3, 2))
    Q = haar_orthogonal(F.ranks[k - 1], rs)
    factors = list(F.factors)
    factors[k - 1] = factors[k - 1] @ Q
    G = TuckerFactors(mode_product(F.core, Q.T, k), factors)
    np.testing.assert_allclose(tucker_reconstruct(G), tucker_reconstruct(F), atol=1e-11)
