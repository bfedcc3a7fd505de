"""Kernel backend selection.

The compiled extension is preferred when it imports cleanly; otherwise the
numpy/pure-Python fallback is used.  Setting ``STROKESEG_PURE_PYTHON=1``
forces the fallback (used by the cross-backend tests and the benchmark).
"""

import os

from . import _fallback

if os.environ.get("STROKESEG_PURE_PYTHON") == "1":
    _impl = _fallback
else:
    try:
        from . import _native as _impl
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND
resample_polyline = _impl.resample_polyline
straw_values = _impl.straw_values
corner_walk = _impl.corner_walk
rasterize_polyline = _impl.rasterize_polyline
upscale_nearest = _impl.upscale_nearest


def available_backends():
    """Return the importable kernel modules, keyed by backend name."""
    backends = {"python": _fallback}
    try:
        from . import _native
        backends["native"] = _native
    except ImportError:
        pass
    return backends
