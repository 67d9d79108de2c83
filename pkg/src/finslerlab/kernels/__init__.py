"""Hot kernels with a compiled core and a numpy fallback chosen at import.

Set ``FINSLERLAB_PURE=1`` to force the fallback.  ``BACKEND`` names the one in use.
"""
import os

import numpy as np

from . import _pykernels

_c = None
if os.environ.get("FINSLERLAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _c
    except ImportError:  # extension not built
        _c = None

BACKEND = "compiled" if _c is not None else "python"


def ray_exit(norm, x, y, backend=None):
    """Batch solve phi(x + s y) = 1 for s > 0; returns s (F(x, y) = 1/s).

    ``backend`` may be ``"compiled"`` or ``"python"`` to override the default.
    """
    x, y = np.broadcast_arrays(np.atleast_2d(np.asarray(x, float)), np.atleast_2d(np.asarray(y, float)))
    x, y = np.array(x, order="C"), np.array(y, order="C")
    use = backend or BACKEND
    if use == "compiled" and _c is None:
        raise RuntimeError("compiled kernels are not available")
    if use == "compiled" and norm.kernel_code >= 0:
        return _c.ray_exit(int(norm.kernel_code), np.ascontiguousarray(norm.kernel_params, float), x, y)
    return _pykernels.ray_exit(norm, x, y)


__all__ = ["ray_exit", "BACKEND"]
