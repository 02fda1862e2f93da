"""Transport kernels with a compiled core and a pure-Python fallback.

The Cython extension is used when it has been built; otherwise, or when the
environment variable ``WQLAB_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy implementation in :mod:`._pure` is used.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pure

try:
    from . import _core as _compiled
except ImportError:  # extension not built
    _compiled = None

NORM_CODES = {"L1": 0, "L2": 1, "LInf": 2}


def available_backends() -> list[str]:
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def get_backend(name: str | None = None) -> ModuleType:
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        name = BACKEND
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return _compiled
    if name == "python":
        return _pure
    raise ValueError(f"unknown backend {name!r}")


_force_pure = os.environ.get("WQLAB_PURE_PYTHON", "") not in ("", "0")
BACKEND = "python" if (_force_pure or _compiled is None) else "cython"
