"""Select the geodesic tracer backend at import time.

The compiled extension is used when it was built; otherwise the pure-Python
tracer with the identical contract.  ``OBTUSELAB_BACKEND=python`` forces the
fallback.
"""

import os

from . import _kernel_py

PLANE, HYPERBOLOID, SPHEROID, TABLE = (_kernel_py.PLANE, _kernel_py.HYPERBOLOID,
                                       _kernel_py.SPHEROID, _kernel_py.TABLE)

_compiled = None
if os.environ.get("OBTUSELAB_BACKEND", "").lower() != "python":
    try:
        from . import _kernel as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def trace(kind, pa, rmax, y0, length, s_out=(), radii=(), **kw):
    """Dispatch to the compiled tracer for analytic profiles, else to Python."""
    if _compiled is not None and kind != TABLE:
        return _compiled.trace(kind, pa, rmax, y0, length, s_out, radii, **kw)
    return _kernel_py.trace(kind, pa, rmax, y0, length, s_out, radii, **kw)


def trace_python(kind, pa, rmax, y0, length, s_out=(), radii=(), **kw):
    return _kernel_py.trace(kind, pa, rmax, y0, length, s_out, radii, **kw)
