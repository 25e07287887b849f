"""Kernel selection.

The compiled ``_merson`` extension is used when it imports; otherwise the
numpy kernel.  ``DCESIM_BACKEND=python`` forces the fallback.
"""

import os

from . import _pykernel

BACKEND = "python"
kernel = _pykernel

if os.environ.get("DCESIM_BACKEND", "").lower() != "python":
    try:
        from . import _merson
    except ImportError:
        pass
    else:
        kernel = _merson
        BACKEND = "cython"


def get_kernel(name=None):
    """Return the kernel module for ``name`` ('cython', 'python' or None)."""
    if name is None:
        return kernel
    if name == "python":
        return _pykernel
    if name == "cython":
        from . import _merson

        return _merson
    raise ValueError(f"unknown backend {name!r}")
