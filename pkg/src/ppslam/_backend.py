"""Select the compiled observer kernel when available.

Set ``PPSLAM_PURE_PYTHON=1`` to force the numpy implementation.
"""

from __future__ import annotations

import os

from . import _kernels_py

MODE_EVAL = _kernels_py.MODE_EVAL
MODE_EULER = _kernels_py.MODE_EULER
MODE_IMEX = _kernels_py.MODE_IMEX

python_kernel = _kernels_py.observer_kernel

try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:  # extension not built
    _compiled = None

compiled_kernel = None if _compiled is None else _compiled.observer_kernel

if compiled_kernel is not None and os.environ.get("PPSLAM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    observer_kernel = compiled_kernel
    IMPLEMENTATION = "cython"
else:
    observer_kernel = python_kernel
    IMPLEMENTATION = "python"


def get_kernel(name: str | None = None):
    """Return the kernel by name (``"python"``, ``"cython"``) or the default."""
    if name is None:
        return observer_kernel
    if name == "python":
        return python_kernel
    if name == "cython":
        if compiled_kernel is None:
            raise ImportError("compiled kernel is not built")
        return compiled_kernel
    raise ValueError(f"unknown kernel {name!r}")
