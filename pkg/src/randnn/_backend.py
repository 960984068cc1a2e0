"""Select the kernel implementation at import time.

The compiled extension is used when it imports cleanly; set
``RANDNN_PURE_PYTHON=1`` to force the NumPy fallback.
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and not os.environ.get("RANDNN_PURE_PYTHON"):
    kernels = _compiled
    BACKEND = "cython"
else:
    kernels = _kernels_py
    BACKEND = "python"


def available_backends():
    """Mapping of backend name to kernel module, for benchmarks and tests."""
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["cython"] = _compiled
    return out
