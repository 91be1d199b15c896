"""Backend selection for the hot loops.

The compiled extension is used when it imports and ``LIMINF_PURE_PYTHON`` is
unset; otherwise the pure-Python module is used.  Both expose
``classify_axis``, ``shape_scan`` and ``kahan_cumsum``.
"""

import os

from . import _kernels_py

NO_OVERLAP = _kernels_py.NO_OVERLAP
OVERLAP = _kernels_py.OVERLAP
UNCERTAIN = _kernels_py.UNCERTAIN


def _load():
    if os.environ.get("LIMINF_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "cython"


_impl, BACKEND = _load()

classify_axis = _impl.classify_axis
shape_scan = _impl.shape_scan
kahan_cumsum = _impl.kahan_cumsum


def backends():
    """Available (name, module) pairs, compiled first when present."""
    out = []
    try:
        from . import _kernels  # type: ignore[attr-defined]

        out.append(("cython", _kernels))
    except ImportError:
        pass
    out.append(("python", _kernels_py))
    return out
