"""Kernel backend selection.

Imports the compiled kernels when the extension built, otherwise the pure
numpy twins. Setting the environment variable FLEXAFT_PURE_PYTHON to a
non-empty value forces the numpy implementation regardless of what is
installed (useful for parity testing and benchmarking).
"""

import os

from . import _kernels_py

if os.environ.get("FLEXAFT_PURE_PYTHON", ""):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

spline_design = _impl.spline_design
fpaft_loglik_score = _impl.fpaft_loglik_score


def backend_name():
    """Name of the active kernel implementation: 'compiled' or 'python'."""
    return _impl.BACKEND_NAME
