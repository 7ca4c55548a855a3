"""Backend selection for the forward/backward sweeps.

The compiled extension is used when it imports; otherwise the numpy
implementation takes over.  Setting ``IDSRECON_PURE_PYTHON=1`` forces the
fallback.
"""

import os

from . import _pykernel

if os.environ.get("IDSRECON_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernel
else:
    try:
        from . import _ckernel as _impl
    except ImportError:  # extension not built
        _impl = _pykernel

BACKEND = "cython" if _impl is not _pykernel else "python"

forward = _impl.forward
backward = _impl.backward
decode_app = _impl.decode_app


def get_backend(name: str):
    """Return the kernel module for ``name`` in {"python", "cython"}."""
    if name == "python":
        return _pykernel
    if name == "cython":
        from . import _ckernel

        return _ckernel
    raise ValueError(f"unknown backend {name!r}")
