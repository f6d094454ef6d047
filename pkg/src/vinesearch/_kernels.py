"""Kernel dispatch: compiled extension when available, numpy otherwise."""
import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("VINESEARCH_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

kendall_tau_sorted = _impl.kendall_tau_sorted
kernel_cdf = _impl.kernel_cdf
kernel_pdf = _impl.kernel_pdf
