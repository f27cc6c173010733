"""Numba acceleration shim.

Hot kernels are written once and compiled with numba when available.  Set
CQS_NUMBA=0 to force the pure-numpy fallback path (used by the benchmark
and by CI on platforms without numba).  Both paths produce bit-identical
results because all randomness is precomputed or counter-based.
"""
import os

USE_NUMBA = os.environ.get("CQS_NUMBA", "1") not in ("0", "false", "no")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:
        USE_NUMBA = False

if not USE_NUMBA:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        def wrap(f):
            return f
        return wrap


def thread_cap():
    """Thread limit from CQS_THREADS, or None."""
    v = os.environ.get("CQS_THREADS")
    return int(v) if v else None
