"""Backend selection for the hot loops.

The compiled extension ``chargeqoc._kernels`` is preferred; the numpy
fallback ``chargeqoc._kernels_py`` is used when the extension was not built
or when the environment variable ``CHARGEQOC_PURE_PYTHON`` is set to a
non-empty value other than ``0``.
"""

import os

from . import _kernels_py

_force_python = os.environ.get("CHARGEQOC_PURE_PYTHON", "") not in ("", "0")

if _force_python:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

krotov_sweep = _impl.krotov_sweep
eigen_chain = _impl.eigen_chain
ordered_product = _impl.ordered_product


def backends():
    """Return the available backend modules keyed by name."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
        out["cython"] = _kernels
    except ImportError:
        pass
    return out
