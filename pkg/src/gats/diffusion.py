"""A small self-contained DDPM/DDIM engine.

The denoiser is a two-layer MLP (affine -> SiLU -> affine) with
hand-written backpropagation.  Its input is the noisy state, a 3-scalar time
embedding ``(t/T, sin 2 pi t/T, cos 2 pi t/T)`` and an optional condition
vector; it predicts the injected noise.
"""
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingDiverged
from .rng import Stream, as_stream

BETA_START = 1e-4
BETA_END = 0.02
LR = 3e-3
HIDDEN = 128
TOY_BATCH = 1024
TIME_FEATURES = 3


@dataclass(frozen=True)
class DiffusionSchedule:
    T: int = 1000
    beta_start: float = BETA_START
    beta_end: float = BETA_END

    @property
    def betas(self):
        return np.linspace(self.beta_start, self.beta_end, self.T)

    @property
    def alphas(self):
        return 1.0 - self.betas

    @property
    def alpha_bars(self):
        return np.cumprod(self.alphas)

    def alpha_bar(self, t):
        """``alpha_bar_t`` for 1-based ``t``; ``t = 0`` gives 1."""
        t = np.asarray(t)
        ab = np.concatenate([[1.0], self.alpha_bars])
        return ab[t]


def forward_noise(x0, t, eps, schedule):
    """``sqrt(ab_t) x0 + sqrt(1 - ab_t) eps``; ``t`` scalar or per-row."""
    t = np.asarray(t)
    if np.any(t < 1) or np.any(t > schedule.T):
        raise ValueError(f"timestep out of range 1..{schedule.T}")
    ab = schedule.alpha_bar(t)
    x0 = np.asarray(x0, dtype=np.float64)
    if ab.ndim == 1:
        ab = ab.reshape((-1,) + (1,) * (x0.ndim - 1))
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * np.asarray(eps, dtype=np.float64)


def time_embedding(t, T):
    s = np.asarray(t, dtype=np.float64) / T
    return np.stack([s, np.sin(2 * np.pi * s), np.cos(2 * np.pi * s)], axis=-1)


def _silu(z):
    sig = 0.5 * (1.0 + np.tanh(0.5 * z))
    return z * sig, sig


class ScoreNet:
    """Noise-prediction MLP ``out = W2^T silu(W1^T h + b1) + b2``."""

    PARAMS = ("W1", "b1", "W2", "b2")

    def __init__(self, state_dim, hidden=HIDDEN, cond_dim=0, T=1000, seed=0):
        self.state_dim = int(state_dim)
        self.hidden = int(hidden)
        self.cond_dim = int(cond_dim)
        self.T = int(T)
        in_dim = self.in_dim
        rs = as_stream(seed, "scorenet-init")
        self.W1 = rs.normal((in_dim, self.hidden)) / math.sqrt(in_dim)
        self.b1 = np.zeros(self.hidden)
        self.W2 = rs.normal((self.hidden, self.state_dim)) / math.sqrt(self.hidden)
        self.b2 = np.zeros(self.state_dim)

    @property
    def in_dim(self):
        return self.state_dim + TIME_FEATURES + self.cond_dim

    @property
    def n_params(self):
        return sum(getattr(self, p).size for p in self.PARAMS)

    def params(self):
        return {p: getattr(self, p) for p in self.PARAMS}

    def set_params(self, params):
        for p in self.PARAMS:
            setattr(self, p, np.array(params[p], dtype=np.float64))

    def copy(self):
        other = object.__new__(ScoreNet)
        other.__dict__.update({k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()})
        return other

    def _inputs(self, x, t, cond):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        B = x.shape[0]
        t = np.broadcast_to(np.asarray(t), (B,))
        parts = [x, time_embedding(t, self.T)]
        if self.cond_dim:
            if cond is None:
                raise ValueError("network expects a condition vector")
            parts.append(np.broadcast_to(np.asarray(cond, dtype=np.float64), (B, self.cond_dim)))
        return np.concatenate(parts, axis=1)

    def forward(self, x, t, cond=None):
        h = self._inputs(x, t, cond)
        z = h @ self.W1 + self.b1
        a, sig = _silu(z)
        out = a @ self.W2 + self.b2
        return out, (h, z, a, sig)

    def __call__(self, x, t, cond=None):
        return self.forward(x, t, cond)[0]

    def backward(self, cache, dout):
        h, z, a, sig = cache
        gW2 = a.T @ dout
        gb2 = dout.sum(axis=0)
        da = dout @ self.W2.T
        dz = da * (sig * (1.0 + z * (1.0 - sig)))
        gW1 = h.T @ dz
        gb1 = dz.sum(axis=0)
        return {"W1": gW1, "b1": gb1, "W2": gW2, "b2": gb2}


def dsm_loss_and_grad(net, x0, schedule, rng=None, t=None, eps=None, cond=None):
    """Mean over the batch of ``||eps - net(x_t, t, cond)||^2`` and its gradient.

    ``t`` and ``eps`` may be given explicitly; otherwise they are drawn from
    ``rng``.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    B = x0.shape[0]
    if B == 0:
        raise ValueError("empty batch")
    if t is None:
        t = rng.integers(schedule.T, B) + 1
    if eps is None:
        eps = rng.normal(x0.shape)
    xt = forward_noise(x0, t, eps, schedule)
    out, cache = net.forward(xt, t, cond)
    diff = out - eps
    loss = float(np.sum(diff * diff) / B)
    grads = net.backward(cache, 2.0 * diff / B)
    return loss, grads


@dataclass
class Standardizer:
    """Per-coordinate affine map to zero mean / unit variance (constant coordinates only centered)."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, data, floor=1e-12):
        data = np.asarray(data, dtype=np.float64)
        mean = data.mean(axis=0)
        sd = data.std(axis=0)
        sd = np.where(sd > floor, sd, 1.0)
        return cls(mean, sd)

    def transform(self, x):
        return (np.asarray(x) - self.mean) / self.scale

    def inverse(self, z):
        return np.asarray(z) * self.scale + self.mean

    def to_json(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_json(cls, d):
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["scale"], dtype=np.float64))


@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    _m: dict = field(default_factory=dict)
    _v: dict = field(default_factory=dict)
    _k: int = 0

    def step(self, net, grads):
        self._k += 1
        c1 = 1.0 - self.beta1 ** self._k
        c2 = 1.0 - self.beta2 ** self._k
        for p, g in grads.items():
            m = self._m.get(p, 0.0) * self.beta1 + (1 - self.beta1) * g
            v = self._v.get(p, 0.0) * self.beta2 + (1 - self.beta2) * g * g
            self._m[p], self._v[p] = m, v
            setattr(net, p, getattr(net, p) - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps))


@dataclass
class SGD:
    lr: float = 1e-3

    def step(self, net, grads):
        for p, g in grads.items():
            setattr(net, p, getattr(net, p) - self.lr * g)


def make_optimizer(name, lr):
    if name == "sgd":
        return SGD(lr)
    if name == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {name!r}")


def train(net, data, schedule, steps, lr=LR, seed=0, batch_size=256, cond=None,
          optimizer="adam", lr_decay="linear", log_every=100):
    """Minibatch training on ``data`` (rows are samples).  Returns ``(net, trace)``.

    ``lr_decay="linear"`` anneals the step size linearly to zero over
    ``steps``; ``"constant"`` keeps it fixed.

    ``trace`` lists ``(step, loss)`` every ``log_every`` steps (and at step 0).
    ``cond`` holds one condition row per sample, or ``None``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    N = data.shape[0]
    rs = Stream(seed, "train")
    if lr_decay not in ("linear", "constant"):
        raise ValueError(f"unknown lr_decay {lr_decay!r}")
    opt = make_optimizer(optimizer, lr)
    trace = []
    for step in range(steps):
        idx = rs.integers(N, batch_size)
        c = None if cond is None else np.asarray(cond)[idx]
        loss, grads = dsm_loss_and_grad(net, data[idx], schedule, rs, cond=c)
        if not math.isfinite(loss):
            raise TrainingDiverged(f"loss became {loss} at step {step}; lower the learning rate")
        if step % log_every == 0:
            trace.append((step, loss))
        if lr_decay == "linear":
            opt.lr = lr * (1.0 - step / steps)
        opt.step(net, grads)
    return net, trace


def ddim_timesteps(T, num_steps):
    """Evenly spaced subsequence ``ceil((i+1) T / S)`` for ``i < S``; ends at ``T``."""
    if not 1 <= num_steps <= T:
        raise ValueError(f"num_steps must be in 1..{T}")
    return np.array([-(-(i + 1) * T // num_steps) for i in range(num_steps)], dtype=np.int64)


def ddim_sample(model, schedule, num_steps=250, n_samples=1, seed=0, cond=None, state_dim=None, x_T=None):
    """Deterministic (eta = 0) DDIM sampling.

    ``model(x, t, cond)`` returns the predicted noise; any callable works.
    """
    if state_dim is None:
        state_dim = model.state_dim
    ts = ddim_timesteps(schedule.T, num_steps)
    x = Stream(seed, "ddim").normal((n_samples, state_dim)) if x_T is None else np.array(x_T, dtype=np.float64)
    for i in range(len(ts) - 1, -1, -1):
        t = int(ts[i])
        t_prev = int(ts[i - 1]) if i > 0 else 0
        ab = schedule.alpha_bar(t)
        ab_prev = schedule.alpha_bar(t_prev)
        eps = model(x, np.full(x.shape[0], t), cond)
        x0 = (x - math.sqrt(1.0 - ab) * eps) / math.sqrt(ab)
        x = math.sqrt(ab_prev) * x0 + math.sqrt(1.0 - ab_prev) * eps
    return x


# -- checkpoints ------------------------------------------------------------

CKPT_MAGIC = b"GNET"
CKPT_VERSION = 1
_CKPT_HEADER = struct.Struct("<4sHIIII")


def save_checkpoint(path, net):
    """Header ``GNET | u16 version | u32 state, hidden, cond, T`` then W1, b1, W2, b2 as little-endian f64."""
    with open(path, "wb") as fh:
        fh.write(_CKPT_HEADER.pack(CKPT_MAGIC, CKPT_VERSION, net.state_dim, net.hidden, net.cond_dim, net.T))
        for p in ScoreNet.PARAMS:
            fh.write(np.ascontiguousarray(getattr(net, p), dtype="<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    magic, version, sd, hid, cd, T = _CKPT_HEADER.unpack_from(buf, 0)
    if magic != CKPT_MAGIC or version != CKPT_VERSION:
        raise ValueError(f"not a version-{CKPT_VERSION} checkpoint: {path}")
    net = object.__new__(ScoreNet)
    net.state_dim, net.hidden, net.cond_dim, net.T = sd, hid, cd, T
    shapes = {"W1": (net.in_dim, hid), "b1": (hid,), "W2": (hid, sd), "b2": (sd,)}
    off = _CKPT_HEADER.size
    for p in ScoreNet.PARAMS:
        n = int(np.prod(shapes[p]))
        setattr(net, p, np.frombuffer(buf, "<f8", n, off).astype(np.float64).reshape(shapes[p]))
        off += 8 * n
    if off != len(buf):
        raise ValueError("checkpoint payload length mismatch")
    return net


# -- scalar toy model -------------------------------------------------------


@dataclass(frozen=True)
class ToyConfig:
    N: int = 20000
    weights: tuple = (0.5, 0.5)
    means: tuple = (1.0, 3.0)
    std: float = 0.2
    law: str = "anchored"
    a: float = 0.5
    b: float = 4.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.law not in ("anchored", "uniform"):
            raise ValueError(f"law must be 'anchored' or 'uniform', got {self.law!r}")
        if self.law == "uniform" and not self.b > self.a:
            raise ValueError("uniform law needs b > a")


def sample_mixture(cfg, n, rs):
    comp = rs.uniform((n,))
    cum = np.cumsum(cfg.weights) / np.sum(cfg.weights)
    k = np.searchsorted(cum, comp, side="right")
    return np.asarray(cfg.means)[k] + cfg.std * rs.normal((n,))


def toy_factorization_dataset(cfg, seed=0):
    """Draw ``x`` from the mixture and factor it as ``x = u v``.

    Returns ``(pairs, x)`` with ``pairs[:, 0] = u`` and ``pairs[:, 1] = v``.
    """
    rs = Stream(seed, "toy-data")
    x = sample_mixture(cfg, cfg.N, rs)
    if cfg.law == "anchored":
        v = np.ones(cfg.N)
    else:
        v = cfg.a + (cfg.b - cfg.a) * rs.uniform((cfg.N,))
    return np.column_stack([x / v, v]), x


def run_toy(cfg, steps=5000, seed=0, lr=LR, batch_size=TOY_BATCH, hidden=HIDDEN, ddim_steps=250,
            n_samples=10000, optimizer="adam", lr_decay="linear", schedule=None):
    """Train on factor pairs, sample with DDIM, and score the products ``u v``."""
    from .metrics import mode_fractions, wasserstein_1d

    schedule = schedule or DiffusionSchedule()
    pairs, _ = toy_factorization_dataset(cfg, seed)
    std = Standardizer.fit(pairs)
    net = ScoreNet(2, hidden=hidden, T=schedule.T, seed=Stream(seed, "toy-net"))
    net, trace = train(net, std.transform(pairs), schedule, steps, lr=lr, seed=seed,
                       batch_size=batch_size, optimizer=optimizer, lr_decay=lr_decay)
    z = ddim_sample(net, schedule, ddim_steps, n_samples, seed=seed)
    uv = std.inverse(z)
    x_gen = uv[:, 0] * uv[:, 1]
    ref = sample_mixture(cfg, n_samples, Stream(seed, "toy-reference"))
    return {
        "w1": wasserstein_1d(x_gen, ref),
        "mode_fractions": mode_fractions(x_gen, cfg.means, 0.6),
        "samples": uv,
        "x": x_gen,
        "trace": trace,
        "net": net,
        "standardizer": std,
    }
