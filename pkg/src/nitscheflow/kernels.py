"""Assembly kernel backend selection.

NITSCHE_FLOW_KERNELS=numba|numpy forces a backend; the default is numba when
importable, else the vectorized numpy fallback.  NITSCHE_FLOW_THREADS caps the
numba threading layer (assembly is deterministic for any thread count because
locals are scattered with a fixed reduction order).
"""

from __future__ import annotations

import os

from . import _kernels_numpy

_BACKEND = None
_BACKEND_NAME = None


class _Backend:
    def __init__(self, name, mod):
        self.name = name
        self.cell_residual = mod.cell_residual
        self.cell_jacobian = mod.cell_jacobian
        self.edge_residual = mod.edge_residual
        self.edge_jacobian = mod.edge_jacobian


def _load(name):
    if name == "numpy":
        return _Backend("numpy", _kernels_numpy)
    if name == "numba":
        from . import _kernels_numba
        threads = os.environ.get("NITSCHE_FLOW_THREADS")
        if threads:
            import numba
            numba.set_num_threads(max(1, int(threads)))
        return _Backend("numba", _kernels_numba)
    raise ValueError(f"unknown kernel backend {name!r}")


def get_backend() -> _Backend:
    global _BACKEND, _BACKEND_NAME
    want = os.environ.get("NITSCHE_FLOW_KERNELS", "").strip().lower()
    if not want:
        want = _default_name()
    if _BACKEND is None or _BACKEND_NAME != want:
        _BACKEND = _load(want)
        _BACKEND_NAME = want
    return _BACKEND


def _default_name():
    try:
        import numba  # noqa: F401
        return "numba"
    except ImportError:
        return "numpy"
