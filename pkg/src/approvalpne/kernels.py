"""Kernel backend selection.

The compiled extension is used when it imports and the environment variable
``APPROVALPNE_PURE_PYTHON`` is unset; otherwise the pure-Python module is used.
Callers whose integers may leave the int64 range must ask for
:data:`pure` explicitly (see :func:`fits_int64`).
"""

import os

from . import _pykernels as pure

INVALID = pure.INVALID
_INT64_HEADROOM = 1 << 62

compiled = None
if not os.environ.get("APPROVALPNE_PURE_PYTHON"):
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

BACKEND = "cython" if compiled is not None else "python"
active = compiled if compiled is not None else pure


def fits_int64(*bounds: int) -> bool:
    return all(abs(b) < _INT64_HEADROOM for b in bounds)
