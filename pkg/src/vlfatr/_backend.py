"""Pick the trial kernels at import time.

The compiled ``_core`` extension is used when it was built; otherwise, or when
``VLFATR_BACKEND=python`` is set, the numpy implementation in ``_pykernels``.
"""

from __future__ import annotations

import os

from . import _pykernels

python = _pykernels

try:
    from . import _core as compiled
except ImportError:  # extension not built
    compiled = None

_requested = os.environ.get("VLFATR_BACKEND", "auto").lower()
if _requested not in ("auto", "python", "compiled"):
    raise ImportError(f"VLFATR_BACKEND must be auto, python or compiled, not {_requested!r}")
if _requested == "compiled" and compiled is None:
    raise ImportError("VLFATR_BACKEND=compiled but vlfatr._core is not built")

kernels = python if _requested == "python" or compiled is None else compiled
NAME = "python" if kernels is python else "compiled"


def get(name: str | None = None):
    """Return a kernel module by name, or the import-time default."""
    if name is None:
        return kernels
    if name == "python":
        return python
    if name == "compiled":
        if compiled is None:
            raise RuntimeError("compiled backend is not available")
        return compiled
    raise ValueError(f"unknown backend {name!r}")
