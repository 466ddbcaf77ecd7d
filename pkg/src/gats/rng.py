"""Reproducible random streams.

Every stream is a Philox4x64-10 counter-based generator keyed by
``(derive_seed(seed, task), stream)``.  Uniform doubles are taken from the raw
64-bit outputs as ``(raw >> 11) * 2**-53`` and Gaussians use the Box-Muller
transform on consecutive uniform pairs, ``z0 = sqrt(-2 ln(1-u1)) cos(2 pi u2)``
followed by ``z1 = ... sin(2 pi u2)``.  Nothing here depends on numpy's own
distribution samplers, whose algorithms are version dependent.
"""
import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(seed, task=""):
    """``seed XOR blake2b-64(task)``; the empty task leaves ``seed`` unchanged."""
    seed = int(seed) & _MASK64
    if not task:
        return seed
    h = int.from_bytes(hashlib.blake2b(task.encode(), digest_size=8).digest(), "little")
    return seed ^ h


class Stream:
    """One deterministic random stream."""

    def __init__(self, seed=0, task="", stream=0):
        self.seed = int(seed)
        self.task = task
        self.stream = int(stream)
        key = np.array([derive_seed(seed, task), int(stream) & _MASK64], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key)

    def __repr__(self):
        return f"Stream(seed={self.seed}, task={self.task!r}, stream={self.stream})"

    def spawn(self, task, stream=0):
        """A new independent stream derived from this one's seed."""
        sub = f"{self.task}/{task}" if self.task else task
        return Stream(self.seed, sub, stream)

    def raw(self, n):
        return self._bitgen.random_raw(int(n))

    def uniform(self, shape=()):
        n = int(np.prod(shape, dtype=np.int64)) if shape != () else 1
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * (2.0**-53)
        return u.reshape(shape) if shape != () else float(u[0])

    def normal(self, shape=()):
        n = int(np.prod(shape, dtype=np.int64)) if shape != () else 1
        m = (n + 1) // 2
        u = self.uniform((2 * m,))
        u1, u2 = u[0::2], u[1::2]
        rad = np.sqrt(-2.0 * np.log1p(-u1))
        z = np.empty(2 * m)
        z[0::2] = rad * np.cos(2.0 * np.pi * u2)
        z[1::2] = rad * np.sin(2.0 * np.pi * u2)
        z = z[:n]
        return z.reshape(shape) if shape != () else float(z[0])

    def integers(self, high, size):
        """Integers in ``[0, high)`` via ``floor(u * high)``."""
        return np.minimum((self.uniform((int(size),)) * high).astype(np.int64), high - 1)


def as_stream(seed, task=""):
    """Accept an int seed or an existing :class:`Stream`."""
    if isinstance(seed, Stream):
        return seed
    return Stream(seed, task)
