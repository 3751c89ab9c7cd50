"""Backend selection for the hot numeric kernels.

NETGRIP_BACKEND=numba|numpy picks the implementation; default is numba with
a silent fallback to numpy when numba is unavailable. Both backends share
signatures and algorithms, so results agree to float64 roundoff.
"""

import os
import warnings

_requested = os.environ.get("NETGRIP_BACKEND", "").strip().lower()

if _requested not in ("", "numba", "numpy"):
    raise ValueError(f"NETGRIP_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numpy":
    from . import numpy_backend as _impl

    BACKEND = "numpy"
else:
    try:
        from . import numba_backend as _impl

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        warnings.warn("numba unavailable; falling back to numpy kernels", stacklevel=1)
        from . import numpy_backend as _impl

        BACKEND = "numpy"

SHAPE_SPHERE = _impl.SHAPE_SPHERE
SHAPE_CAPSULE = _impl.SHAPE_CAPSULE
SHAPE_BOX = _impl.SHAPE_BOX
SHAPE_ELLIPSOID = _impl.SHAPE_ELLIPSOID
SHAPE_FRUSTUM = _impl.SHAPE_FRUSTUM

spring_energy_grad = _impl.spring_energy_grad
node_tension_sum = _impl.node_tension_sum
sdf_batch = _impl.sdf_batch


def get_backend(name):
    """Return a specific backend module by name (for benchmarks/tests)."""
    if name == "numpy":
        from . import numpy_backend

        return numpy_backend
    if name == "numba":
        from . import numba_backend

        return numba_backend
    raise ValueError(f"unknown backend {name!r}")
