"""Rasterization kernels: compiled extension when available, numpy fallback otherwise.

Set ``PROXILEAK_KERNELS=python`` to force the fallback (used by the benchmark
and the backend-equivalence tests).
"""

import os

from . import _py

_impl = _py
if os.environ.get("PROXILEAK_KERNELS", "auto").lower() != "python":
    try:
        from . import _annulus as _impl  # type: ignore[no-redef]
    except ImportError:
        pass

annulus_occupancy = _impl.annulus_occupancy


def backend_name() -> str:
    """Name of the active kernel backend: "native" or "python"."""
    return _impl.NAME
