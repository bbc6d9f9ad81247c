"""Kernel backend selection.

The compiled extension is used when it imports; set ``PCURL_KERNELS=python``
to force the numpy fallback.  Functions missing from the extension are taken
from the fallback.
"""
import os

from . import _kernels_py

_names = (
    "curl", "curl_t", "cell_sq", "spread", "cell_weight", "energy_flux",
    "divergence", "gradient", "laplacian", "wdot",
)


def _load(choice):
    if choice == "python":
        return _kernels_py
    try:
        from . import _kernels
    except ImportError:
        if choice == "cython":
            raise
        return _kernels_py
    return _kernels


def use(choice: str = "auto") -> str:
    """Rebind the module-level kernels; returns the backend name in use."""
    global BACKEND
    mod = _load(choice)
    g = globals()
    for name in _names:
        g[name] = getattr(mod, name, getattr(_kernels_py, name))
    BACKEND = mod.BACKEND
    return BACKEND


BACKEND = use(os.environ.get("PCURL_KERNELS", "auto"))
