"""Select the compiled kernels when available, else the Python fallback.

Set ``EXTREMEABC_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

impl = _fallback
NAME = "python"

if not os.environ.get("EXTREMEABC_PURE_PYTHON"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        impl = _kernels
        NAME = "cython"


def kernels(name=None):
    """Return the kernel module by name (``"cython"`` or ``"python"``)."""
    if name is None:
        return impl
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
