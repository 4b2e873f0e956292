"""Kernel backend selection.

The compiled Cython module is preferred; the numpy fallback is used when it
is unavailable or when the environment variable TSTMR_PURE_PYTHON is set to
a non-empty value other than "0".
"""

import os

from . import _kernels_py

_cy = None
if os.environ.get("TSTMR_PURE_PYTHON", "0") in ("", "0"):
    try:
        from . import _kernels_cy as _cy
    except ImportError:
        _cy = None

_impl = _cy if _cy is not None else _kernels_py

BACKEND = "cython" if _cy is not None else "python"

csr_matvec = _impl.csr_matvec
csr_lower_solve = _impl.csr_lower_solve
csr_lower_transpose_solve = _impl.csr_lower_transpose_solve
csr_ldu_solve = _impl.csr_ldu_solve
ic0_factor = _impl.ic0_factor
ilu0_factor = _impl.ilu0_factor


def available_backends():
    """Names of the kernel backends importable in this environment."""
    return ("python", "cython") if _cy is not None else ("python",)


def backend_module(name):
    """Return the raw kernel module for an explicit backend choice."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _cy is None:
            raise ValueError("compiled kernel backend is not available")
        return _cy
    raise ValueError(f"unknown kernel backend {name!r}")
