"""Backend selection for the hot loops.

The compiled extension ``gats._kernels`` is used when it imports; otherwise
the numpy implementations in ``gats._fallback`` take over.  Setting
``GATS_PURE_PYTHON=1`` in the environment forces the fallback.
"""
import os
from types import ModuleType

from . import _fallback

_compiled: ModuleType | None
try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = ("cython", "python")


def available_backends():
    return tuple(b for b in BACKENDS if b == "python" or _compiled is not None)


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the active backend)."""
    if name is None:
        name = BACKEND
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available; reinstall without GATS_NO_EXT")
        return _compiled
    if name == "python":
        return _fallback
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")


if _compiled is not None and not os.environ.get("GATS_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"

_active = get_backend(BACKEND)
rd_integrate = _active.rd_integrate
jacobi_svd = _active.jacobi_svd
