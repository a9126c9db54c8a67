"""Kernel backend selection.

Hot numeric kernels ship in two variants: numba ``@njit`` loop kernels
(``kernels_jit``) and vectorized numpy fallbacks (``kernels_np``). The
fallback path is selected when the ``SWARMTRUST_DISABLE_NUMBA`` environment
variable is set to a non-empty value other than ``0``, or when numba is not
importable. ``benchmarks/bench_kernels.py`` compares the two paths.
"""
import os


def numba_disabled() -> bool:
    flag = os.environ.get("SWARMTRUST_DISABLE_NUMBA", "")
    return flag not in ("", "0")


def _numba_available() -> bool:
    if numba_disabled():
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _numba_available()


def get_kernels():
    """Return the active kernel module (jit or numpy fallback)."""
    if USE_NUMBA:
        from swarmtrust import kernels_jit
        return kernels_jit
    from swarmtrust import kernels_np
    return kernels_np
