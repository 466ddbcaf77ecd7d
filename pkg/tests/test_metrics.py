import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from gats.metrics import (
    classical_mds,
    error_report,
    kde_1d,
    mode_fractions,
    psnr,
    rmse,
    silverman_bandwidth,
    wasserstein_1d,
)
from gats.procrustes import op_solve
from gats.rng import Stream
from gats.tensor import rel_err_l2


def pairwise(P):
    return np.sqrt(np.sum((P[:, None] - P[None]) ** 2, axis=-1))


def test_error_report_exact():
    X = np.arange(1.0, 7.0).reshape(2, 3)
    rep = error_report(X, X, value_range=1.0)
    assert rep.rel_err_l1 == rep.rel_err_l2 == rep.rmse == 0.0
    assert rep.to_json()["psnr"] == "inf"


def test_error_report_hand_values():
    X = np.ones((4, 5))
    rep = error_report(X, 1.1 * X, time_mode=2, value_range=1.0)
    assert rep.rmse == pytest.approx(0.1, abs=1e-14)
    assert rep.psnr == pytest.approx(20.0, abs=1e-10)
    assert rep.rel_err_l1 == pytest.approx(0.1, abs=1e-14)
    assert rep.avg_rmse == pytest.approx(0.1, abs=1e-14)


def test_error_report_consistent_with_tensor_core(rs):
    X, Y = rs.normal((3, 4, 5)), rs.normal((3, 4, 5))
    assert error_report(X, Y).rel_err_l2 == pytest.approx(rel_err_l2(X, Y), abs=1e-14)
    with pytest.raises(ZeroDivisionError):
        error_report(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        error_report(np.zeros(3), np.ones(4))


def test_avg_rmse_is_per_frame_mean():
    X = np.zeros((2, 3))
    Y = np.array([[0.0, 1.0, 0.0], [0.0, 1.0, 2.0]])
    X[0, 0] = 1.0
    rep = error_report(X, Y, time_mode=2)
    frames = [rmse(X[:, t], Y[:, t]) for t in range(3)]
    assert rep.avg_rmse == pytest.approx(np.mean(frames), abs=1e-15)
    assert psnr(X, X, 1.0) == math.inf


def test_mds_recovers_planar_points(rs):
    P = rs.normal((12, 2))
    Y = classical_mds(pairwise(P), 2)
    Pc, Yc = P - P.mean(0), Y - Y.mean(0)
    Q = op_solve(Yc, Pc)
    assert np.linalg.norm(Yc @ Q - Pc) <= 1e-8


def test_mds_small_cases():
    Y = classical_mds(np.array([[0.0, 3.0], [3.0, 0.0]]))
    assert np.linalg.norm(Y[0] - Y[1]) == pytest.approx(3.0, abs=1e-12)
    assert not np.any(classical_mds(np.zeros((4, 4))))
    with pytest.raises(ValueError):
        classical_mds(np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_mds_gram_spectrum(rs):
    P = rs.normal((10, 5))
    D = pairwise(P)
    Y = classical_mds(D, 3)
    J = np.eye(10) - 0.1
    B = -0.5 * J @ (D * D) @ J
    top = np.sort(np.linalg.eigvalsh(B))[::-1][:3]
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(Y @ Y.T))[::-1][:3], top, atol=1e-8)


def test_mds_warns_on_non_euclidean():
    D = np.array([[0, 1, 1, 5], [1, 0, 1, 1], [1, 1, 0, 1], [5, 1, 1, 0]], dtype=float)
    with pytest.warns(UserWarning, match="not Euclidean"):
        classical_mds(D, 4)


def test_wasserstein_basic():
    S = np.array([0.3, -1.0, 2.0])
    assert wasserstein_1d(S, S) == 0.0
    assert wasserstein_1d([0.0], [1.0]) == 1.0
    with pytest.raises(ValueError):
        wasserstein_1d([], [1.0])


def test_wasserstein_matches_scipy(rs):
    a, b = rs.normal((300,)), 0.5 + 2 * rs.normal((170,))
    assert wasserstein_1d(a, b) == pytest.approx(stats.wasserstein_distance(a, b), abs=1e-12)


def test_wasserstein_two_normal_draws():
    a = Stream(0, "w1-calibration", 0).normal((10000,))
    b = Stream(0, "w1-calibration", 1).normal((10000,))
    assert wasserstein_1d(a, b) <= 0.03


def test_kde_normalized(rs):
    x = rs.normal((500,))
    grid = np.linspace(-10, 10, 4001)
    dens = kde_1d(x, grid)
    assert abs(np.trapezoid(dens, grid) - 1.0) <= 1e-3
    with pytest.raises(ValueError):
        kde_1d([], grid)
    with pytest.raises(ValueError):
        kde_1d(x, grid, bandwidth=0.0)


def test_kde_matches_direct_sum():
    x = np.array([0.0, 1.0, 3.0])
    g = np.array([0.5, 2.0])
    h = 0.7
    direct = [np.mean(np.exp(-0.5 * ((gi - x) / h) ** 2)) / (h * np.sqrt(2 * np.pi)) for gi in g]
    np.testing.assert_allclose(kde_1d(x, g, h), direct, rtol=1e-14)


def test_silverman_rule():
    x = np.arange(10.0)
    sd = np.std(x, ddof=1)
    iqr = np.percentile(x, 75) - np.percentile(x, 25)
    assert silverman_bandwidth(x) == pytest.approx(0.9 * min(sd, iqr / 1.34) * 10 ** -0.2)


def test_mode_fractions():
    assert mode_fractions([1.0, 1.5, 3.0, 10.0], [1.0, 3.0], 0.6) == [0.5, 0.25]


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(1, 30), m=st.integers(1, 30), k=st.integers(1, 30))
def test_wasserstein_triangle(seed, n, m, k):
    rs = Stream(seed, "w1-tri")
    a, b, c = rs.normal((n,)), 2 * rs.normal((m,)), rs.normal((k,)) + 1
    assert wasserstein_1d(a, c) <= wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-12
    assert wasserstein_1d(a, b) == pytest.approx(wasserstein_1d(b, a), abs=1e-12)
