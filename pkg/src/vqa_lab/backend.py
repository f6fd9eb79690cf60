"""Numeric backend selection.

Two interchangeable kernel implementations exist: JIT-compiled loops
(:mod:`vqa_lab._kernels_numba`, the default) and vectorized numpy
(:mod:`vqa_lab._kernels_numpy`).  Setting the environment variable
``VQALAB_DISABLE_NUMBA`` to ``1``/``true``/``yes`` before the package is
imported forces the numpy fallback; the fallback is also selected
automatically when numba is not importable.

The active module is exposed as ``kernels`` and is fixed for the lifetime
of the process.  ``get_kernels(name)`` loads a specific implementation
regardless of the flag, which is what the cross-checking tests and the
benchmark script use.
"""

from __future__ import annotations

import importlib
import os


def _flag_disabled() -> bool:
    return os.environ.get("VQALAB_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")


def get_kernels(name: str):
    """Import and return a kernel module by backend name ('numba' or 'numpy')."""
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    return importlib.import_module(f"vqa_lab._kernels_{name}")


if _flag_disabled():
    kernels = get_kernels("numpy")
else:
    try:
        kernels = get_kernels("numba")
    except ImportError:
        kernels = get_kernels("numpy")


def backend_name() -> str:
    """Name of the active backend, 'numba' or 'numpy'."""
    return "numba" if kernels.HAS_NUMBA else "numpy"
