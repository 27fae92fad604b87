"""Selects between the compiled kernels and the pure-numpy fallback.

Both backends implement the same two functions (``hs_sweep`` and
``convolve2d``) with bit-identical float64 arithmetic. The compiled
extension is preferred when it imports cleanly; set ``FLOWTRAJ_BACKEND``
to ``python`` or ``cython`` to force one, or leave it at ``auto``.
"""

import os

from . import _kernels_py

_requested = os.environ.get("FLOWTRAJ_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "python", "cython"):
    raise ImportError(
        "FLOWTRAJ_BACKEND must be 'auto', 'python', or 'cython', "
        f"got {_requested!r}"
    )

if _requested == "python":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _kernels_py
        BACKEND = "python"

hs_sweep = _impl.hs_sweep
convolve2d = _impl.convolve2d
