"""Pick the compiled kernels when available, else the numpy fallback.

Set ``SLABSELECT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from slabselect import _fallback

if os.environ.get("SLABSELECT_PURE_PYTHON", "").strip() not in ("", "0"):
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from slabselect import _kernels as kernels
        BACKEND = "cython"
    except ImportError:  # extension not built
        kernels = _fallback
        BACKEND = "python"


def available_backends():
    """Map of backend name -> kernel module for every backend importable here."""
    out = {"python": _fallback}
    try:
        from slabselect import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
