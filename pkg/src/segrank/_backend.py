"""Kernel backend selection.

The compiled extension is used when importable; ``SEGRANK_PURE_PYTHON=1``
forces the numpy fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py


def _load_compiled() -> ModuleType | None:
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()

if _compiled is not None and not os.environ.get("SEGRANK_PURE_PYTHON"):
    kernels: ModuleType = _compiled
    BACKEND = "cython"
else:
    kernels = _kernels_py
    BACKEND = "python"


def get_kernels(name: str) -> ModuleType:
    """Return the kernel module called ``name`` ("cython" or "python")."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("segrank._kernels extension is not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    return ["cython", "python"] if _compiled is not None else ["python"]
