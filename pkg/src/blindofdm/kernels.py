"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when it is
not built or when the environment variable ``BLINDOFDM_PURE_PYTHON`` is set
to a non-empty value other than ``0``.
"""

import os

from . import _kernels_py as python_backend

_force_py = os.environ.get("BLINDOFDM_PURE_PYTHON", "") not in ("", "0")

compiled_backend = None
if not _force_py:
    try:
        from . import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

if compiled_backend is not None:
    BACKEND = "cython"
    fir_stream = compiled_backend.fir_stream
    region_decide = compiled_backend.region_decide
else:
    BACKEND = "python"
    fir_stream = python_backend.fir_stream
    region_decide = python_backend.region_decide

__all__ = ["BACKEND", "fir_stream", "region_decide", "python_backend", "compiled_backend"]
