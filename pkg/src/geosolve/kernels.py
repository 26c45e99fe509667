"""Kernel selection: the compiled extension when available, else pure Python.

Set GEOSOLVE_PURE=1 to force the pure-Python twin (used by the benchmark and
the equivalence tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("GEOSOLVE_PURE"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

simple_cycles_length = _impl.simple_cycles_length
polygon_is_simple = _impl.polygon_is_simple
segments_intersect = _impl.segments_intersect


def backend_name() -> str:
    return _impl.BACKEND
