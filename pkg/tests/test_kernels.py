import numpy as np
import pytest

from gats import _fallback, kernels
from gats.datagen import RdConfig, random_initial_condition

BACKENDS = kernels.available_backends()


def test_backend_registry():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS
    assert kernels.get_backend("python") is _fallback
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def rd_reference(u0, nu, rho, dx, dt, n_sub, nt):
    """Scalar loop over grid points, written independently of either backend."""
    u = list(u0)
    nx = len(u)
    lam = nu * dt / (dx * dx)
    frames = [u[:]]
    for _ in range(1, nt):
        for _ in range(n_sub):
            u = [u[i] + lam * (u[i - 1] - 2 * u[i] + u[(i + 1) % nx]) + rho * dt * u[i] * (1 - u[i]) for i in range(nx)]
        frames.append(u[:])
    return np.array(frames).T


@pytest.mark.parametrize("backend", BACKENDS)
def test_rd_matches_scalar_loop(backend):
    u0 = random_initial_condition(32, seed=4)
    args = (u0, 2e-3, 1.5, 1 / 32, 2e-3, 3, 4)
    np.testing.assert_allclose(kernels.get_backend(backend).rd_integrate(*args), rd_reference(*args),
                               rtol=0, atol=1e-14)


@pytest.mark.parametrize("backend", BACKENDS)
def test_jacobi_kernel(backend, rs):
    a = rs.normal((9, 5))
    w, v, sweeps = kernels.get_backend(backend).jacobi_svd(np.ascontiguousarray(a), 1e-15, 60)
    assert 1 <= sweeps < 60
    np.testing.assert_allclose(v.T @ v, np.eye(5), atol=1e-13)
    np.testing.assert_allclose(w, a @ v, atol=1e-12)
    G = w.T @ w
    assert np.max(np.abs(G - np.diag(np.diag(G)))) <= 1e-12 * np.max(np.diag(G))
    np.testing.assert_allclose(np.sort(np.linalg.norm(w, axis=0))[::-1], np.linalg.svd(a, compute_uv=False), rtol=1e-13)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
def test_backends_agree():
    cfg = RdConfig(nu=1e-3, rho=1.0, nx=256, nt=6)
    dt, n_sub = cfg.stepping()
    u0 = random_initial_condition(256, seed=1)
    a = kernels.get_backend("cython").rd_integrate(u0, cfg.nu, cfg.rho, cfg.dx, dt, n_sub, cfg.nt)
    b = kernels.get_backend("python").rd_integrate(u0, cfg.nu, cfg.rho, cfg.dx, dt, n_sub, cfg.nt)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-13)
    m = np.random.default_rng(0).standard_normal((12, 6))
    wa, va, _ = kernels.get_backend("cython").jacobi_svd(m.copy(), 1e-15, 60)
    wb, vb, _ = kernels.get_backend("python").jacobi_svd(m.copy(), 1e-15, 60)
    np.testing.assert_allclose(np.abs(wa), np.abs(wb), atol=1e-12)
    np.testing.assert_allclose(np.abs(va), np.abs(vb), atol=1e-12)


def test_pure_python_env_switch(monkeypatch):
    import importlib

    monkeypatch.setenv("GATS_PURE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
        assert mod.rd_integrate is _fallback.rd_integrate
    finally:
        monkeypatch.delenv("GATS_PURE_PYTHON")
        importlib.reload(kernels)
