"""Numeric hot kernels with switchable backends.

Two interchangeable implementations exist: a numba-JIT path
(:mod:`alqa.kernels.numba_impl`) and a pure-numpy path
(:mod:`alqa.kernels.numpy_impl`). The active backend is chosen once at
import time from the ``ALQA_BACKEND`` environment variable:

* ``auto`` (default) — numba when importable, numpy otherwise
* ``numba`` — require the JIT path, fail loudly if unavailable
* ``numpy`` — force the fallback path

Both paths are run-to-run deterministic; they may differ from each other
in the last float bits because summation order differs. Use
``benchmarks/bench_kernels.py`` to compare their throughput.
"""

import os

from alqa.kernels import numpy_impl

_REQUESTED = os.environ.get("ALQA_BACKEND", "auto").strip().lower()

if _REQUESTED not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"ALQA_BACKEND must be one of auto|numba|numpy, got {_REQUESTED!r}"
    )

if _REQUESTED == "numpy":
    _impl = numpy_impl
else:
    try:
        from alqa.kernels import numba_impl as _impl
    except ImportError:
        if _REQUESTED == "numba":
            raise
        _impl = numpy_impl


def backend_name() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return "numba" if _impl is not numpy_impl else "numpy"


conv2d_forward = _impl.conv2d_forward
conv2d_backward_input = _impl.conv2d_backward_input
conv2d_backward_weights = _impl.conv2d_backward_weights
maxpool2d_forward = _impl.maxpool2d_forward
maxpool2d_backward = _impl.maxpool2d_backward
resize_bilinear = _impl.resize_bilinear
