"""Numba/numpy backend selection for the hot kernels.

Set RVNLAB_NUMBA=0 to force the pure-numpy fallback path.  The flag is
read at import time; `benchmarks/bench_kernels.py` compares both paths.
"""

import os

USE_NUMBA = os.environ.get("RVNLAB_NUMBA", "1") != "0"

if USE_NUMBA:
    try:
        from numba import njit, prange
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if not USE_NUMBA:
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def deco(fn):
            return fn
        return deco

    prange = range
