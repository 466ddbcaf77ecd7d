"""Deterministic synthetic data: low-rank tensor corpora and 1-d
reaction-diffusion trajectories."""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ShapeError
from .linalg import haar_stiefel
from .rng import Stream
from .tensor import fold, mode_product
from .tucker import _check_ranks

NU_GRID = (1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 1e-1)
RHO_GRID = (0.1, 0.5, 1.0, 2.0)


def synthetic_lowrank(dims, ranks, spectrum_decay=0.5, noise_level=0.0, n_samples=1, seed=0):
    """Corpus of tensors with exact multilinear rank ``ranks`` plus optional noise.

    The core's mode-1 unfolding is ``diag(decay**i) W^T`` with ``W``
    orthonormal, so for matrices the singular values are exactly
    ``decay**i``; all factors are Haar frames.
    """
    dims = tuple(int(n) for n in dims)
    ranks = _check_ranks(dims, ranks)
    rest = int(np.prod(ranks[1:], dtype=np.int64))
    if ranks[0] > rest:
        raise ShapeError(f"ranks {ranks} are not a feasible multilinear rank")
    profile = spectrum_decay ** np.arange(ranks[0])
    out = []
    for i in range(n_samples):
        rs = Stream(seed, "synthetic_lowrank", i)
        W = haar_stiefel(rest, ranks[0], rs)
        core = fold(profile[:, None] * W.T, 1, ranks)
        X = core
        for k, (n, r) in enumerate(zip(dims, ranks), start=1):
            X = mode_product(X, haar_stiefel(n, r, rs), k)
        if noise_level:
            X = X + noise_level * rs.normal(dims)
        out.append(np.ascontiguousarray(X))
    return out


@dataclass(frozen=True)
class RdConfig:
    """Periodic 1-d reaction-diffusion ``u_t = nu u_xx + rho u (1 - u)`` on [0, 1).

    ``dt`` caps the internal step; by default it is
    ``min(0.4 dx^2 / nu, 0.1 / rho)``.
    """

    nu: float = 1e-3
    rho: float = 1.0
    nx: int = 1024
    nt: int = 200
    t_end: float = 1.0
    seed: int = 0
    dt: float | None = None

    def __post_init__(self):
        if self.nu < 0 or self.rho < 0:
            raise ValueError("nu and rho must be non-negative")
        if self.nx < 8 or self.nt < 2:
            raise ValueError("need nx >= 8 and nt >= 2")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")

    @property
    def dx(self):
        return 1.0 / self.nx

    def default_dt(self):
        return min(0.4 * self.dx**2 / max(self.nu, 1e-12), 0.1 / max(self.rho, 1e-12))

    def stepping(self):
        """``(dt, substeps per stored frame)``; frames land exactly on ``linspace(0, t_end, nt)``."""
        frame_dt = self.t_end / (self.nt - 1)
        cap = self.default_dt() if self.dt is None else float(self.dt)
        n_sub = max(1, math.ceil(frame_dt / cap - 1e-12))
        return frame_dt / n_sub, n_sub


class StabilityError(ValueError):
    pass


def reaction_diffusion_1d(cfg, u0, backend=None):
    """Explicit finite-difference trajectory, shape ``(nx, nt)``.

    Refuses to run unless ``2 nu dt / dx^2 + rho dt <= 1``, the condition
    under which each step maps [0, 1] into itself.
    """
    u0 = np.ascontiguousarray(u0, dtype=np.float64)
    if u0.shape != (cfg.nx,):
        raise ShapeError(f"initial condition must have length {cfg.nx}, got {u0.shape}")
    if np.any(u0 < 0) or np.any(u0 > 1):
        raise ValueError("initial condition must lie in [0, 1]")
    dt, n_sub = cfg.stepping()
    lam = cfg.nu * dt / cfg.dx**2
    if 2 * lam + cfg.rho * dt > 1.0:
        raise StabilityError(
            f"explicit scheme unstable: 2*nu*dt/dx^2 + rho*dt = {2 * lam + cfg.rho * dt:.3f} > 1; "
            f"reduce dt (currently {dt:.3e}) or nx"
        )
    k = kernels if backend is None else kernels.get_backend(backend)
    return k.rd_integrate(u0, float(cfg.nu), float(cfg.rho), cfg.dx, dt, int(n_sub), int(cfg.nt))


def random_initial_condition(nx, n_modes=4, seed=0, x=None, max_wavenumber=4):
    """Random superposition of periodic sinusoids mapped into [0.1, 0.9].

    ``u(x) = 0.5 + 0.4 * s(x) / sum|a_j|`` with
    ``s(x) = sum_j a_j sin(2 pi k_j x + phi_j)`` and integer ``k_j``; ``x``
    defaults to the grid ``i / nx``.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    rs = Stream(seed, "rd-initial-condition")
    k = 1 + rs.integers(max_wavenumber, n_modes)
    a = rs.uniform((n_modes,)) * 2.0 - 1.0
    phi = 2.0 * np.pi * rs.uniform((n_modes,))
    if x is None:
        x = np.arange(nx) / nx
    x = np.asarray(x, dtype=np.float64)
    s = np.sin(2.0 * np.pi * np.outer(x, k) + phi) @ a
    total = np.sum(np.abs(a))
    return 0.5 + 0.4 * s / total if total > 0 else np.full(x.shape, 0.5)


def rd_corpus(n, seed=0, nu=None, rho=None, nx=1024, nt=200, t_end=1.0, n_modes=4):
    """``n`` trajectories with ``(nu, rho)`` drawn from the default grids unless fixed.

    Returns ``(trajectories, conditions)``.
    """
    rs = Stream(seed, "rd-corpus")
    trajs, conds = [], []
    for i in range(n):
        nu_i = NU_GRID[rs.integers(len(NU_GRID), 1)[0]] if nu is None else nu
        rho_i = RHO_GRID[rs.integers(len(RHO_GRID), 1)[0]] if rho is None else rho
        cfg = RdConfig(nu=nu_i, rho=rho_i, nx=nx, nt=nt, t_end=t_end, seed=seed)
        u0 = random_initial_condition(nx, n_modes, seed=Stream(seed, "rd-ic", i).raw(1)[0])
        trajs.append(reaction_diffusion_1d(cfg, u0))
        conds.append({"nu": nu_i, "rho": rho_i})
    return trajs, conds
